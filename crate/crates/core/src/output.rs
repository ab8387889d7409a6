//! Text output of a [`ResultsBundle`].
//!
//! Every file opens with `# format_version = 1` and a units line. All
//! quantities are in reduced units: length `sigma`, energy `epsilon`, mass
//! `m`, time `tau = sigma sqrt(m/epsilon)`, charge `q` with unit Coulomb
//! prefactor, `k_B = 1`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::engine::{AcfTable, ResultsBundle};
use crate::error::{Error, Result};
use crate::greenkubo::TransportResult;
use crate::stats::Estimate;

pub const OUTPUT_FORMAT_VERSION: u32 = 1;

const UNITS: &str = "# units: reduced (sigma, epsilon, m, tau = sigma*sqrt(m/epsilon), k_B = 1)";

fn header(out: &mut String, title: &str) {
    let _ = writeln!(out, "# format_version = {OUTPUT_FORMAT_VERSION}");
    let _ = writeln!(out, "{UNITS}");
    let _ = writeln!(out, "# {title}");
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn row(out: &mut String, name: &str, value: String, stderr: Option<f64>, units: &str, note: &str) {
    let err = stderr.map_or_else(|| "-".to_string(), num);
    let _ = writeln!(out, "{name:<28} {value:>20} {err:>20}  {units}{}", if note.is_empty() { String::new() } else { format!("  # {note}") });
}

fn estimate(out: &mut String, name: &str, e: &Option<Estimate>, units: &str) {
    if let Some(e) = e {
        row(out, name, num(e.mean), Some(e.stderr), units, "");
    }
}

fn transport(out: &mut String, name: &str, t: &TransportResult, units: &str) {
    let note = format!(
        "origins={} t_max={} {}",
        t.origins,
        num(t.t_max),
        if t.converged { "plateau" } else { "no-plateau" }
    );
    row(out, name, num(t.value), Some(t.stderr), units, &note);
}

fn file_label(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Summary file text: run scalars, averages and transport coefficients.
pub fn summary_text(b: &ResultsBundle) -> String {
    let mut out = String::new();
    header(&mut out, "summary: quantity value stderr units");
    row(&mut out, "n_molecules", b.n_molecules.to_string(), None, "1", "");
    row(&mut out, "volume", num(b.volume), None, "sigma^3", "");
    row(&mut out, "density", num(b.density), None, "sigma^-3", "");
    row(&mut out, "set_temperature", num(b.set_temperature), None, "epsilon/k_B", "");
    row(&mut out, "dt", num(b.dt), None, "tau", "");
    row(&mut out, "n_ext", b.n_ext.to_string(), None, "1", "");
    row(&mut out, "equilibration_steps", b.equilibration_steps.to_string(), None, "1", "");
    row(&mut out, "production_steps", b.production_steps.to_string(), None, "1", "");
    estimate(&mut out, "temperature", &b.temperature, "epsilon/k_B");
    estimate(&mut out, "pressure", &b.pressure, "epsilon/sigma^3");
    estimate(&mut out, "potential_energy", &b.potential_energy, "epsilon");
    if let Some(m) = &b.massieu {
        row(&mut out, "compressibility_factor", num(m.compressibility.mean), Some(m.compressibility.stderr), "1", "");
        row(&mut out, "residual_energy", num(m.residual_energy.mean), Some(m.residual_energy.stderr), "epsilon/(k_B T)", "");
        row(
            &mut out,
            "residual_heat_capacity",
            num(m.residual_heat_capacity.mean),
            Some(m.residual_heat_capacity.stderr),
            "k_B",
            "",
        );
    }
    for s in &b.solvation {
        row(
            &mut out,
            &format!("solvation_{}_{}", s.label_a, s.label_b),
            num(s.number),
            None,
            "1",
            &format!("r_min={}", num(s.r_min)),
        );
    }
    if let Some(t) = &b.conductivity {
        transport(&mut out, "electric_conductivity", t, "q^2/(epsilon sigma tau)");
    }
    if let Some(t) = &b.thermal_conductivity {
        transport(&mut out, "thermal_conductivity", t, "k_B/(sigma tau)");
    }
    for (name, t) in &b.self_diffusion {
        transport(&mut out, &format!("self_diffusion_{name}"), t, "sigma^2/tau");
    }
    if let Some(r) = &b.residence {
        let label = format!("residence_time_{}_{}", r.solute, r.solvent);
        let note = format!("radius={} tolerance={}", num(r.radius), num(r.tolerance_time));
        match &r.tau {
            Some(t) => {
                transport(&mut out, &label, t, "tau");
                let _ = writeln!(out, "# {label}: {note}");
            }
            None => row(&mut out, &label, "-".into(), None, "tau", &note),
        }
    }
    for w in &b.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
    out
}

fn massieu_text(b: &ResultsBundle) -> Option<String> {
    let m = b.massieu.as_ref()?;
    let mut out = String::new();
    header(&mut out, &format!("residual Massieu derivatives A^r_mn, {} samples", m.samples));
    let _ = writeln!(out, "# m n value stderr  (dimensionless)");
    for e in &m.entries {
        let _ = writeln!(out, "{} {} {} {}", e.m, e.n, num(e.value), num(e.stderr));
    }
    Some(out)
}

fn acf_text(a: &AcfTable) -> String {
    let mut out = String::new();
    header(
        &mut out,
        &format!("autocorrelation {} [{}], n_ext={}, samples={}", a.name, a.units, a.n_ext, a.samples),
    );
    let _ = writeln!(out, "# t[tau] C(t) running_integral");
    for (k, (c, i)) in a.summary.acf.iter().zip(&a.summary.integral).enumerate() {
        let _ = writeln!(out, "{} {} {}", num(k as f64 * a.summary.lag_time), num(*c), num(*i));
    }
    out
}

/// All output files as `(file name, contents)` in a fixed order.
pub fn render(b: &ResultsBundle) -> Vec<(String, String)> {
    let mut files = vec![("summary.dat".to_string(), summary_text(b))];
    if let Some(t) = massieu_text(b) {
        files.push(("massieu.dat".into(), t));
    }
    for t in &b.rdf {
        let mut out = String::new();
        header(
            &mut out,
            &format!(
                "g(r) {} - {}, bin width {}, partner density {}",
                t.label_a,
                t.label_b,
                num(t.bin_width),
                num(t.partner_density)
            ),
        );
        let _ = writeln!(out, "# r[sigma] g(r) cumulative_neighbors");
        for ((r, g), n) in t.r_mid.iter().zip(&t.g).zip(&t.cumulative) {
            let _ = writeln!(out, "{} {} {}", num(*r), num(*g), num(*n));
        }
        files.push((format!("rdf_{}_{}.dat", file_label(&t.label_a), file_label(&t.label_b)), out));
    }
    for a in &b.correlations {
        files.push((format!("acf_{}.dat", file_label(&a.name)), acf_text(a)));
    }
    files
}

/// Writes every output file into `dir` and returns their paths.
pub fn emit_results(b: &ResultsBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    render(b)
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greenkubo::ResidenceResult;

    fn empty() -> ResultsBundle {
        ResultsBundle {
            n_molecules: 10,
            volume: 1000.0,
            density: 0.01,
            set_temperature: 1.0,
            dt: 0.001,
            n_ext: 1,
            equilibration_steps: 0,
            production_steps: 0,
            temperature: None,
            pressure: None,
            potential_energy: None,
            massieu: None,
            rdf: Vec::new(),
            solvation: Vec::new(),
            conductivity: None,
            thermal_conductivity: None,
            self_diffusion: Vec::new(),
            residence: None,
            correlations: Vec::new(),
            warnings: Vec::new(),
        }
    }

    #[test]
    fn empty_bundle_writes_summary_only() {
        let files = render(&empty());
        assert_eq!(files.len(), 1);
        assert_eq!(files[0].0, "summary.dat");
        assert!(files[0].1.starts_with("# format_version = 1\n# units:"));
    }

    #[test]
    fn transport_rows_carry_units_and_errors() {
        let t = TransportResult {
            value: 0.25,
            stderr: 0.01,
            converged: true,
            origins: 500,
            t_max: 2.0,
        };
        let mut b = empty();
        b.conductivity = Some(t);
        b.thermal_conductivity = Some(t);
        b.residence = Some(ResidenceResult {
            solute: "Na".into(),
            solvent: "W".into(),
            radius: 3.1,
            tolerance_time: 0.2,
            tau: Some(t),
        });
        let s = summary_text(&b);
        for (name, units) in [
            ("electric_conductivity", "q^2/(epsilon sigma tau)"),
            ("thermal_conductivity", "k_B/(sigma tau)"),
            ("residence_time_Na_W", "tau"),
        ] {
            let line = s.lines().find(|l| l.starts_with(name)).unwrap();
            assert!(line.contains("2.500000000000e-1") && line.contains("1.000000000000e-2"), "{line}");
            assert!(line.contains(units), "{line}");
        }
        assert_eq!(render(&b), render(&b));
    }
}

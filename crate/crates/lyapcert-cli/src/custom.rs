//! Custom system descriptions: a TOML file with closed-form expressions for
//! the dynamics and optional certification ingredients.
//!
//! ```toml
//! name = "my-system"          # optional, defaults to the file stem
//! dim = 1
//! f = ["-x1 + 0.5*sin(tau)*x1"]   # expressions in x1..xn, t, tau
//! fbar = ["-x1"]                  # optional limiting dynamics
//! v = "x1^2/2"                    # optional candidate (default |x|^2/2)
//! delta = "2*s"                   # optional gauge over s (default "s")
//! c_bar = 0.25                    # optional, in (0,1)
//! c_bbar = 2.0                    # optional
//! jacobian_bound = 10.0           # optional
//! ```
//!
//! Decay, sweep, and gain checks need `fbar` (the constructed function
//! composes the candidate with the fast/limiting mismatch); `simulate` and
//! the sampled hypothesis checks work without it.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use lyapcert::bundles::{CheckKind, ExampleBundle};
use lyapcert::constructors::iss_gain;
use lyapcert::systems::{
    CompatibilityConstants, Gauge, GaugeClass, LimitingSystem, LyapunovCandidate, ScalarFn,
    TimeVaryingSystem,
};

use crate::expr::Expression;

#[derive(Deserialize)]
struct CustomFile {
    name: Option<String>,
    dim: usize,
    f: Vec<String>,
    fbar: Option<Vec<String>>,
    v: Option<String>,
    delta: Option<String>,
    c_bar: Option<f64>,
    c_bbar: Option<f64>,
    jacobian_bound: Option<f64>,
}

fn state_vars(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

/// Load a custom description into the same bundle shape the stock examples
/// use, so every command can treat them uniformly.
pub fn load_custom(path: &Path) -> Result<ExampleBundle, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: CustomFile =
        toml::from_str(&text).map_err(|e| format!("bad description file: {e}"))?;
    if file.dim == 0 || file.dim > 9 {
        return Err("dim must be between 1 and 9".into());
    }
    if file.f.len() != file.dim {
        return Err(format!("f must list exactly {} expressions", file.dim));
    }

    let names = state_vars(file.dim);
    let mut vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    vars.push("t");
    vars.push("tau");

    let mut f_rows = Vec::new();
    for (i, src) in file.f.iter().enumerate() {
        f_rows.push(Expression::parse(src, &vars).map_err(|e| format!("f[{i}]: {e}"))?);
    }
    let dim = file.dim;
    let f_rows = Arc::new(f_rows);
    let f_eval = f_rows.clone();
    let sys = TimeVaryingSystem::new(
        dim,
        Arc::new(move |x: &[f64], t: f64, tau: f64| {
            let mut vals = x.to_vec();
            vals.push(t);
            vals.push(tau);
            f_eval.iter().map(|e| e.eval(&vals)).collect()
        }),
    );

    let lim = match &file.fbar {
        Some(rows) => {
            if rows.len() != dim {
                return Err(format!("fbar must list exactly {dim} expressions"));
            }
            let mut lim_vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            lim_vars.push("t");
            let mut parsed = Vec::new();
            for (i, src) in rows.iter().enumerate() {
                parsed
                    .push(Expression::parse(src, &lim_vars).map_err(|e| format!("fbar[{i}]: {e}"))?);
            }
            let parsed = Arc::new(parsed);
            Some(LimitingSystem::new(
                dim,
                Arc::new(move |x: &[f64], t: f64| {
                    let mut vals = x.to_vec();
                    vals.push(t);
                    parsed.iter().map(|e| e.eval(&vals)).collect()
                }),
            ))
        }
        None => None,
    };

    let candidate = match &file.v {
        Some(src) => {
            let mut v_vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            v_vars.push("t");
            let expr = Expression::parse(src, &v_vars).map_err(|e| format!("v: {e}"))?;
            LyapunovCandidate::new(Arc::new(move |x: &[f64], t: f64| {
                let mut vals = x.to_vec();
                vals.push(t);
                expr.eval(&vals)
            }))
        }
        None => LyapunovCandidate::new(Arc::new(|x: &[f64], _t: f64| {
            0.5 * x.iter().map(|v| v * v).sum::<f64>()
        })),
    };

    let delta = match &file.delta {
        Some(src) => {
            let expr = Expression::parse(src, &["s"]).map_err(|e| format!("delta: {e}"))?;
            Gauge::new(GaugeClass::K, "custom-delta", Arc::new(move |s| expr.eval(&[s])))
        }
        None => Gauge::new(GaugeClass::K, "s", Arc::new(|s| s)),
    };
    let c_bar = file.c_bar.unwrap_or(0.5);
    let c_bbar = file.c_bbar.unwrap_or(10.0);
    let jacobian_bound = file.jacobian_bound.unwrap_or(10.0);
    if !(c_bar > 0.0 && c_bar < 1.0) {
        return Err("c_bar must lie in (0,1)".into());
    }
    let constants = CompatibilityConstants::new(c_bar, c_bbar, jacobian_bound.max(1.0 + 1e-9), 1.0);

    let floor_delta = delta.clone();
    let decay_floor: Arc<ScalarFn> =
        Arc::new(move |s| 0.5 * c_bar * floor_delta.eval(0.5 * s) * floor_delta.eval(0.5 * s));
    let input_gain = iss_gain(&delta, c_bar);

    let name = file.name.unwrap_or_else(|| {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "custom".into())
    });

    Ok(ExampleBundle {
        name,
        sys,
        lim,
        candidate,
        delta: Some(delta),
        n_gauge: None,
        constants: Some(constants),
        strictification: None,
        input_gain: Some(input_gain),
        iiss_rate: None,
        decay_floor: decay_floor.clone(),
        sweep_floor: decay_floor,
        decay_on_limiting: false,
        default_alpha: 100.0,
        alpha_floor: 0.0,
        sweep_range: (1.0, 65536.0),
        ic_range: (-2.0, 2.0),
        ic_count: 5,
        t_end_decay: 5.0,
        t_end_envelope: 20.0,
        expected: Vec::new(),
        notes: vec![String::from("user-supplied system; expected checks unknown")],
    })
}

pub use lyapcert::bundles::bundle_by_name;

/// Resolve a bundle argument: a stock name first, a description path second.
pub fn resolve_bundle(spec: &str) -> Result<ExampleBundle, String> {
    if let Some(b) = bundle_by_name(spec) {
        return Ok(b);
    }
    let path = Path::new(spec);
    if path.exists() {
        return load_custom(path);
    }
    Err(format!(
        "unknown bundle '{spec}' (stock bundles: {}; or pass a description file path)",
        lyapcert::bundles::BUNDLE_NAMES.join(", ")
    ))
}

/// Checks a bundle can actually run, given its ingredients.
pub fn supported_checks(bundle: &ExampleBundle) -> Vec<CheckKind> {
    let mut out = vec![CheckKind::Hypotheses];
    let constructible = bundle.lim.is_some() || bundle.strictification.is_some();
    if constructible {
        out.push(CheckKind::Decay);
        out.push(CheckKind::Sweep);
    }
    if constructible && bundle.input_gain.is_some() {
        out.push(CheckKind::Iss);
    }
    if constructible && bundle.iiss_rate.is_some() {
        out.push(CheckKind::Iiss);
    }
    if bundle.t_end_envelope > 0.0 && constructible {
        out.push(CheckKind::Envelope);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(tag: &str, contents: &str) -> std::path::PathBuf {
        let mut path = std::env::temp_dir();
        path.push(format!("lyapcert-custom-{}-{tag}.toml", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_scalar_description() {
        let path = write_temp(
            "scalar",
            r#"
dim = 1
f = ["-x1 + 0.2*sin(tau)*x1"]
fbar = ["-x1"]
v = "x1^2/2"
delta = "2*s"
c_bar = 0.25
c_bbar = 2.1
"#,
        );
        let bundle = load_custom(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(bundle.dim(), 1);
        let dx = bundle.sys.eval(&[2.0], 0.0, std::f64::consts::FRAC_PI_2);
        assert!((dx[0] - (-2.0 + 0.4)).abs() < 1e-12);
        assert!(bundle.lim.is_some());
        assert!((bundle.candidate.eval(&[3.0], 0.0) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let path = write_temp("mismatch", "dim = 2\nf = [\"-x1\"]\n");
        let res = load_custom(&path);
        std::fs::remove_file(&path).ok();
        assert!(res.is_err());
    }

    #[test]
    fn resolve_prefers_stock_names() {
        assert!(resolve_bundle("ngs").is_ok());
        assert!(resolve_bundle("never-a-bundle").is_err());
    }
}

//! Flat `key = value` run configuration mirroring the command-line flags.
//!
//! Flags override file values.  Unknown keys are rejected.  Floats are
//! written with 17 significant digits so a config round-trips losslessly.

use crate::output::fmt17;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub command: Option<String>,
    pub mass: Option<f64>,
    pub spin: Option<f64>,
    pub lambda: Option<f64>,
    pub ell: Option<u32>,
    pub overtone: Option<u32>,
    pub branch: Option<String>,
    pub u: Option<f64>,
    pub v: Option<f64>,
    pub w: Option<f64>,
    pub format: Option<String>,
    pub out: Option<String>,
    pub m_min: Option<f64>,
    pub m_max: Option<f64>,
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub grid_m: Option<usize>,
    pub grid_a: Option<usize>,
    pub per_node: Option<bool>,
    pub probe_tol: Option<f64>,
    pub quantity: Option<String>,
    pub degree: Option<usize>,
    pub half_width: Option<f64>,
    pub points: Option<usize>,
    pub unconstrained: Option<bool>,
    pub ells: Option<Vec<u32>>,
    pub eps: Option<Vec<f64>>,
    pub trials: Option<u32>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub jacobian: Option<String>,
    pub unlabeled: Option<bool>,
    pub a_floor: Option<f64>,
    pub lambda_lo: Option<f64>,
    pub lambda_hi: Option<f64>,
    pub scan_count: Option<usize>,
    pub eta_plus_re: Option<f64>,
    pub eta_plus_im: Option<f64>,
    pub eta_minus_re: Option<f64>,
    pub eta_minus_im: Option<f64>,
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|e| format!("bad list entry '{part}': {e}"))
        })
        .collect()
}

macro_rules! set_scalar {
    ($slot:expr, $key:expr, $value:expr) => {{
        $slot = Some(
            $value
                .parse()
                .map_err(|e| format!("bad value for '{}': {e}", $key))?,
        );
    }};
}

impl RunConfig {
    /// Parses the flat text form.  Blank lines and `#` comments are
    /// ignored; any unknown key is an error.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected 'key = value'", lineno + 1));
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "command" => cfg.command = Some(value.to_string()),
                "M" => set_scalar!(cfg.mass, key, value),
                "a" => set_scalar!(cfg.spin, key, value),
                "Lambda" => set_scalar!(cfg.lambda, key, value),
                "ell" => set_scalar!(cfg.ell, key, value),
                "n" => set_scalar!(cfg.overtone, key, value),
                "branch" => cfg.branch = Some(value.to_string()),
                "U" => set_scalar!(cfg.u, key, value),
                "V" => set_scalar!(cfg.v, key, value),
                "W" => set_scalar!(cfg.w, key, value),
                "format" => cfg.format = Some(value.to_string()),
                "out" => cfg.out = Some(value.to_string()),
                "M-min" => set_scalar!(cfg.m_min, key, value),
                "M-max" => set_scalar!(cfg.m_max, key, value),
                "a-min" => set_scalar!(cfg.a_min, key, value),
                "a-max" => set_scalar!(cfg.a_max, key, value),
                "grid-M" => set_scalar!(cfg.grid_m, key, value),
                "grid-a" => set_scalar!(cfg.grid_a, key, value),
                "per-node" => set_scalar!(cfg.per_node, key, value),
                "probe-tol" => set_scalar!(cfg.probe_tol, key, value),
                "quantity" => cfg.quantity = Some(value.to_string()),
                "degree" => set_scalar!(cfg.degree, key, value),
                "half-width" => set_scalar!(cfg.half_width, key, value),
                "points" => set_scalar!(cfg.points, key, value),
                "unconstrained" => set_scalar!(cfg.unconstrained, key, value),
                "ells" => cfg.ells = Some(parse_list(value)?),
                "eps" => cfg.eps = Some(parse_list(value)?),
                "trials" => set_scalar!(cfg.trials, key, value),
                "seed" => set_scalar!(cfg.seed, key, value),
                "tol" => set_scalar!(cfg.tol, key, value),
                "max-iter" => set_scalar!(cfg.max_iter, key, value),
                "jacobian" => cfg.jacobian = Some(value.to_string()),
                "unlabeled" => set_scalar!(cfg.unlabeled, key, value),
                "a-floor" => set_scalar!(cfg.a_floor, key, value),
                "lambda-lo" => set_scalar!(cfg.lambda_lo, key, value),
                "lambda-hi" => set_scalar!(cfg.lambda_hi, key, value),
                "scan-count" => set_scalar!(cfg.scan_count, key, value),
                "eta-plus-re" => set_scalar!(cfg.eta_plus_re, key, value),
                "eta-plus-im" => set_scalar!(cfg.eta_plus_im, key, value),
                "eta-minus-re" => set_scalar!(cfg.eta_minus_re, key, value),
                "eta-minus-im" => set_scalar!(cfg.eta_minus_im, key, value),
                other => return Err(format!("unknown config key '{other}'")),
            }
        }
        Ok(cfg)
    }

    // Round-trip counterpart of `parse`; exercised by the tests.
    #[allow(dead_code)]
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                out.push_str(key);
                out.push_str(" = ");
                out.push_str(&v);
                out.push('\n');
            }
        };
        let f = |x: &Option<f64>| x.map(fmt17);
        put("command", self.command.clone());
        put("M", f(&self.mass));
        put("a", f(&self.spin));
        put("Lambda", f(&self.lambda));
        put("ell", self.ell.map(|x| x.to_string()));
        put("n", self.overtone.map(|x| x.to_string()));
        put("branch", self.branch.clone());
        put("U", f(&self.u));
        put("V", f(&self.v));
        put("W", f(&self.w));
        put("format", self.format.clone());
        put("out", self.out.clone());
        put("M-min", f(&self.m_min));
        put("M-max", f(&self.m_max));
        put("a-min", f(&self.a_min));
        put("a-max", f(&self.a_max));
        put("grid-M", self.grid_m.map(|x| x.to_string()));
        put("grid-a", self.grid_a.map(|x| x.to_string()));
        put("per-node", self.per_node.map(|x| x.to_string()));
        put("probe-tol", f(&self.probe_tol));
        put("quantity", self.quantity.clone());
        put("degree", self.degree.map(|x| x.to_string()));
        put("half-width", f(&self.half_width));
        put("points", self.points.map(|x| x.to_string()));
        put("unconstrained", self.unconstrained.map(|x| x.to_string()));
        put(
            "ells",
            self.ells.as_ref().map(|v| {
                v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            }),
        );
        put(
            "eps",
            self.eps
                .as_ref()
                .map(|v| v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(",")),
        );
        put("trials", self.trials.map(|x| x.to_string()));
        put("seed", self.seed.map(|x| x.to_string()));
        put("tol", f(&self.tol));
        put("max-iter", self.max_iter.map(|x| x.to_string()));
        put("jacobian", self.jacobian.clone());
        put("unlabeled", self.unlabeled.map(|x| x.to_string()));
        put("a-floor", f(&self.a_floor));
        put("lambda-lo", f(&self.lambda_lo));
        put("lambda-hi", f(&self.lambda_hi));
        put("scan-count", self.scan_count.map(|x| x.to_string()));
        put("eta-plus-re", f(&self.eta_plus_re));
        put("eta-plus-im", f(&self.eta_plus_im));
        put("eta-minus-re", f(&self.eta_minus_re));
        put("eta-minus-im", f(&self.eta_minus_im));
        out
    }

    /// Overlays `other` (command-line values) on top of `self`.
    pub fn overridden_by(mut self, other: RunConfig) -> RunConfig {
        macro_rules! overlay {
            ($($field:ident),* $(,)?) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        overlay!(
            command,
            mass,
            spin,
            lambda,
            ell,
            overtone,
            branch,
            u,
            v,
            w,
            format,
            out,
            m_min,
            m_max,
            a_min,
            a_max,
            grid_m,
            grid_a,
            per_node,
            probe_tol,
            quantity,
            degree,
            half_width,
            points,
            unconstrained,
            ells,
            eps,
            trials,
            seed,
            tol,
            max_iter,
            jacobian,
            unlabeled,
            a_floor,
            lambda_lo,
            lambda_hi,
            scan_count,
            eta_plus_re,
            eta_plus_im,
            eta_minus_re,
            eta_minus_im,
        );
        self
    }
}

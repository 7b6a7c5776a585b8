//! Plain-text config formats: scenario files and estimator settings.
//!
//! Both formats are `key = value` lines; `#` starts a comment. Time
//! functions use nested descriptors from the closed algebra:
//!
//! ```text
//! const(12000)                  # constant
//! ramp(0.5)                     # slope * t
//! sin(3000, 3.1415926, 0)      # amplitude, omega, phase
//! expdecay(1, <fn>)             # exp(-rate t) * fn
//! sum(<fn>, <fn>, ...)          # pointwise sum
//! scale(2, <fn>)                # factor * fn
//! ```

use crate::error::{Error, Result};
use crate::geometry::EstimatorId;
use crate::pipeline::EstimatorConfig;
use crate::pll::PllConfig;
use crate::transforms::DerivativeConfig;
use crate::waveforms::{PhaseSpec, ScenarioSpec, TimeFn};

/// Render a time function as a config descriptor (round-trips exactly).
pub fn format_timefn(f: &TimeFn) -> String {
    match f {
        TimeFn::Constant(c) => format!("const({c})"),
        TimeFn::Ramp(s) => format!("ramp({s})"),
        TimeFn::Sinusoid { amplitude, omega, phase } => {
            format!("sin({amplitude}, {omega}, {phase})")
        }
        TimeFn::ExpDecay { rate, inner } => format!("expdecay({rate}, {})", format_timefn(inner)),
        TimeFn::Sum(terms) => {
            let parts: Vec<String> = terms.iter().map(format_timefn).collect();
            format!("sum({})", parts.join(", "))
        }
        TimeFn::Scale(k, inner) => format!("scale({k}, {})", format_timefn(inner)),
    }
}

/// Split `args` at top-level commas (commas inside nested parentheses do
/// not count).
fn split_args(args: &str) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in args.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| Error::parse(format!("unbalanced ')' in '{args}'")))?;
            }
            ',' if depth == 0 => {
                parts.push(args[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::parse(format!("unbalanced '(' in '{args}'")));
    }
    let last = args[start..].trim();
    if !last.is_empty() || !parts.is_empty() {
        parts.push(last);
    }
    Ok(parts)
}

fn parse_number(text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(format!("expected a number, got '{}'", text.trim())))
}

/// Parse a time-function descriptor.
pub fn parse_timefn(text: &str) -> Result<TimeFn> {
    let text = text.trim();
    let open = text
        .find('(')
        .ok_or_else(|| Error::parse(format!("expected 'name(...)', got '{text}'")))?;
    if !text.ends_with(')') {
        return Err(Error::parse(format!("missing closing ')' in '{text}'")));
    }
    let name = text[..open].trim();
    let args = split_args(&text[open + 1..text.len() - 1])?;
    let want = |n: usize| -> Result<()> {
        if args.len() != n {
            Err(Error::parse(format!("{name}(...) takes {n} argument(s), got {}", args.len())))
        } else {
            Ok(())
        }
    };
    match name {
        "const" => {
            want(1)?;
            Ok(TimeFn::constant(parse_number(args[0])?))
        }
        "ramp" => {
            want(1)?;
            Ok(TimeFn::ramp(parse_number(args[0])?))
        }
        "sin" => {
            want(3)?;
            Ok(TimeFn::sinusoid(
                parse_number(args[0])?,
                parse_number(args[1])?,
                parse_number(args[2])?,
            ))
        }
        "expdecay" => {
            want(2)?;
            Ok(TimeFn::exp_decay(parse_number(args[0])?, parse_timefn(args[1])?))
        }
        "scale" => {
            want(2)?;
            Ok(TimeFn::scale(parse_number(args[0])?, parse_timefn(args[1])?))
        }
        "sum" => {
            if args.is_empty() {
                return Err(Error::parse("sum(...) needs at least one term"));
            }
            Ok(TimeFn::sum(args.iter().map(|a| parse_timefn(a)).collect::<Result<Vec<_>>>()?))
        }
        other => Err(Error::parse(format!("unknown function '{other}'"))),
    }
}

/// Parse `key = value` lines, ignoring blanks and `#` comments.
fn parse_kv_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(format!("line {}: expected 'key = value', got '{line}'", lineno + 1))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Serialize a scenario to the config format.
pub fn scenario_to_config(spec: &ScenarioSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("label = {}\n", spec.label));
    out.push_str(&format!("omega_nominal_rad_s = {}\n", spec.omega_nominal));
    out.push_str(&format!("sample_rate_hz = {}\n", spec.sample_rate));
    out.push_str(&format!("duration_s = {}\n", spec.duration));
    let names = ["a", "b", "c"];
    for (phase, name) in spec.phases.iter().zip(names) {
        out.push_str(&format!("phase.{name}.magnitude = {}\n", format_timefn(&phase.magnitude)));
        out.push_str(&format!("phase.{name}.phase_mod = {}\n", format_timefn(&phase.phase_mod)));
        out.push_str(&format!("phase.{name}.displacement_rad = {}\n", phase.displacement));
    }
    out
}

/// Parse a scenario from the config format.
pub fn scenario_from_config(text: &str) -> Result<ScenarioSpec> {
    let mut label = None;
    let mut omega = None;
    let mut rate = None;
    let mut duration = None;
    let mut parts: [[Option<String>; 3]; 3] = Default::default();
    let phase_field = |name: &str| -> Option<(usize, usize)> {
        let rest = name.strip_prefix("phase.")?;
        let (letter, field) = rest.split_once('.')?;
        let p = match letter {
            "a" => 0,
            "b" => 1,
            "c" => 2,
            _ => return None,
        };
        let f = match field {
            "magnitude" => 0,
            "phase_mod" => 1,
            "displacement_rad" => 2,
            _ => return None,
        };
        Some((p, f))
    };

    for (key, value) in parse_kv_lines(text)? {
        match key.as_str() {
            "label" => label = Some(value),
            "omega_nominal_rad_s" => omega = Some(parse_number(&value)?),
            "sample_rate_hz" => rate = Some(parse_number(&value)?),
            "duration_s" => duration = Some(parse_number(&value)?),
            other => match phase_field(other) {
                Some((p, f)) => parts[p][f] = Some(value),
                None => return Err(Error::parse(format!("unknown scenario key '{other}'"))),
            },
        }
    }

    let mut phases = Vec::new();
    for (index, slot) in parts.iter().enumerate() {
        let any = slot.iter().any(Option::is_some);
        if !any {
            continue;
        }
        if index != phases.len() {
            return Err(Error::parse("phases must be contiguous starting at 'a'"));
        }
        let get = |f: usize, what: &str| -> Result<&String> {
            slot[f].as_ref().ok_or_else(|| {
                Error::parse(format!("phase {} is missing '{what}'", ["a", "b", "c"][index]))
            })
        };
        phases.push(PhaseSpec {
            magnitude: parse_timefn(get(0, "magnitude")?)?,
            phase_mod: parse_timefn(get(1, "phase_mod")?)?,
            displacement: parse_number(get(2, "displacement_rad")?)?,
        });
    }

    let spec = ScenarioSpec {
        label: label.ok_or_else(|| Error::parse("scenario config is missing 'label'"))?,
        omega_nominal: omega
            .ok_or_else(|| Error::parse("scenario config is missing 'omega_nominal_rad_s'"))?,
        sample_rate: rate
            .ok_or_else(|| Error::parse("scenario config is missing 'sample_rate_hz'"))?,
        duration: duration
            .ok_or_else(|| Error::parse("scenario config is missing 'duration_s'"))?,
        phases,
    };
    spec.validate()?;
    Ok(spec)
}

/// Parse estimator settings from the config format. Unset keys keep their
/// defaults; `prefilter_hz = off` (or omitting the key) disables that
/// filter.
pub fn estimator_config_from_str(text: &str) -> Result<EstimatorConfig> {
    let mut cfg = EstimatorConfig::default();
    let parse_filter = |value: &str| -> Result<Option<f64>> {
        if value.eq_ignore_ascii_case("off") {
            Ok(None)
        } else {
            Ok(Some(parse_number(value)?))
        }
    };
    for (key, value) in parse_kv_lines(text)? {
        match key.as_str() {
            "nominal_hz" => cfg.nominal_hz = parse_number(&value)?,
            "stencil_halfwidth" => {
                cfg.derivative = DerivativeConfig {
                    stencil_halfwidth: parse_number(&value)? as usize,
                }
            }
            "guard" => cfg.guard = parse_number(&value)?,
            "settle_s" => cfg.settle_s = parse_number(&value)?,
            "prefilter_hz" => cfg.prefilter_hz = parse_filter(&value)?,
            "postfilter_hz" => cfg.postfilter_hz = parse_filter(&value)?,
            "pu_base" => cfg.pu_base = Some(parse_number(&value)?),
            "estimators" => {
                cfg.estimators = value
                    .split(',')
                    .map(EstimatorId::parse)
                    .collect::<Result<Vec<_>>>()?;
            }
            "pll.kp" => cfg.pll.kp = parse_number(&value)?,
            "pll.ki" => cfg.pll.ki = parse_number(&value)?,
            "pll.tau_s" => cfg.pll.tau = parse_number(&value)?,
            "pll.omega_init_rad_s" => cfg.pll.omega_init = Some(parse_number(&value)?),
            other => return Err(Error::parse(format!("unknown estimator key '{other}'"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Render estimator settings in the config format.
pub fn estimator_config_to_string(cfg: &EstimatorConfig) -> String {
    let filter = |v: Option<f64>| match v {
        Some(hz) => hz.to_string(),
        None => "off".to_string(),
    };
    let estimators: Vec<&str> = cfg.estimators.iter().map(|e| e.as_str()).collect();
    let PllConfig { kp, ki, omega_init, tau } = cfg.pll.clone();
    let mut out = String::new();
    out.push_str(&format!("nominal_hz = {}\n", cfg.nominal_hz));
    out.push_str(&format!("stencil_halfwidth = {}\n", cfg.derivative.stencil_halfwidth));
    out.push_str(&format!("guard = {}\n", cfg.guard));
    out.push_str(&format!("settle_s = {}\n", cfg.settle_s));
    out.push_str(&format!("prefilter_hz = {}\n", filter(cfg.prefilter_hz)));
    out.push_str(&format!("postfilter_hz = {}\n", filter(cfg.postfilter_hz)));
    out.push_str(&format!("estimators = {}\n", estimators.join(",")));
    out.push_str(&format!("pll.kp = {kp}\n"));
    out.push_str(&format!("pll.ki = {ki}\n"));
    out.push_str(&format!("pll.tau_s = {tau}\n"));
    if let Some(w) = omega_init {
        out.push_str(&format!("pll.omega_init_rad_s = {w}\n"));
    }
    if let Some(base) = cfg.pu_base {
        out.push_str(&format!("pu_base = {base}\n"));
    }
    out
}

//! Number formatting and range parsing shared by the subcommands.

use crate::CliError;

/// Significant digits of every emitted number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`-style formatting: fixed notation for exponents in `[-4, 12)`,
/// scientific otherwise, trailing zeros removed.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The value as it will be printed, so that computations use exactly the
/// coordinates that end up in the output.
pub fn quantize(x: f64) -> f64 {
    fmt_g(x).parse().expect("formatted numbers parse")
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| CliError::Validation(format!("not a number: {s:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("not a finite number: {s:?}")))
    }
}

/// `start:stop:step` (start included, stop excluded) or a comma list.
pub fn parse_float_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?);
            if step <= 0.0 || stop <= start {
                return Err(CliError::Validation(format!("range {spec:?} needs start < stop and step > 0")));
            }
            let count = ((stop - start) / step - 1e-9).ceil().max(0.0) as usize;
            (0..count).map(|i| quantize(start + i as f64 * step)).collect()
        }
        [_] => spec.split(',').map(parse_f64).map(|v| v.map(quantize)).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(CliError::Validation(format!("expected start:stop:step or a comma list, got {spec:?}"))),
    };
    if values.is_empty() {
        return Err(CliError::Validation(format!("range {spec:?} is empty")));
    }
    Ok(values)
}

/// Integer `start:stop:step` (stop excluded) or a comma list.
pub fn parse_count_range(spec: &str) -> Result<Vec<usize>, CliError> {
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| CliError::Validation(format!("not a count: {s:?}")));
    let parts: Vec<&str> = spec.split(':').collect();
    let values: Vec<usize> = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (int(start)?, int(stop)?, int(step)?);
            if step == 0 || stop <= start {
                return Err(CliError::Validation(format!("range {spec:?} needs start < stop and step > 0")));
            }
            (start..stop).step_by(step).collect()
        }
        [_] => spec.split(',').map(int).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(CliError::Validation(format!("expected start:stop:step or a comma list, got {spec:?}"))),
    };
    if values.is_empty() {
        return Err(CliError::Validation(format!("range {spec:?} is empty")));
    }
    Ok(values)
}

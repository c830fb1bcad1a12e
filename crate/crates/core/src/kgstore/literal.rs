use std::fmt;

use super::KgError;

/// Datatype of a literal cell or data-property value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LiteralKind {
    String,
    Integer,
    Decimal,
    Boolean,
}

impl LiteralKind {
    pub fn xsd_iri(self) -> &'static str {
        match self {
            LiteralKind::String => "http://www.w3.org/2001/XMLSchema#string",
            LiteralKind::Integer => "http://www.w3.org/2001/XMLSchema#integer",
            LiteralKind::Decimal => "http://www.w3.org/2001/XMLSchema#decimal",
            LiteralKind::Boolean => "http://www.w3.org/2001/XMLSchema#boolean",
        }
    }

    pub fn from_xsd_iri(iri: &str) -> Option<Self> {
        [
            LiteralKind::String,
            LiteralKind::Integer,
            LiteralKind::Decimal,
            LiteralKind::Boolean,
        ]
        .into_iter()
        .find(|k| k.xsd_iri() == iri)
    }
}

/// A literal value in canonical lexical form.
///
/// Construction always canonicalizes, so two literals denoting the same value
/// compare equal by plain string equality. Integers carry no leading zeros or
/// `+` sign, booleans are `true`/`false`, and decimals are rendered with at most
/// [`SIGNIFICANT_DIGITS`] significant digits and no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    kind: LiteralKind,
    lexical: String,
}

/// Significant digits kept when rendering decimal values.
pub const SIGNIFICANT_DIGITS: usize = 12;

impl Literal {
    pub fn new(kind: LiteralKind, lexical: &str) -> Result<Self, KgError> {
        let lexical = match kind {
            LiteralKind::String => lexical.to_string(),
            LiteralKind::Integer => canonical_integer(lexical)?,
            LiteralKind::Decimal => canonical_decimal_str(lexical)?,
            LiteralKind::Boolean => canonical_boolean(lexical)?,
        };
        Ok(Literal { kind, lexical })
    }

    pub fn string(s: impl Into<String>) -> Self {
        Literal {
            kind: LiteralKind::String,
            lexical: s.into(),
        }
    }

    pub fn integer(v: i64) -> Self {
        Literal {
            kind: LiteralKind::Integer,
            lexical: v.to_string(),
        }
    }

    /// Decimal literal rendered from a finite float.
    pub fn decimal(v: f64) -> Result<Self, KgError> {
        Ok(Literal {
            kind: LiteralKind::Decimal,
            lexical: render_decimal(v)?,
        })
    }

    pub fn boolean(v: bool) -> Self {
        Literal {
            kind: LiteralKind::Boolean,
            lexical: if v { "true" } else { "false" }.to_string(),
        }
    }

    pub fn kind(&self) -> LiteralKind {
        self.kind
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    /// Numeric value for integer and decimal literals.
    pub fn as_f64(&self) -> Option<f64> {
        match self.kind {
            LiteralKind::Integer | LiteralKind::Decimal => self.lexical.parse().ok(),
            _ => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexical)
    }
}

fn canonical_integer(s: &str) -> Result<String, KgError> {
    let t = s.trim();
    let (neg, digits) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(KgError::BadLiteral(format!("not an integer: {s:?}")));
    }
    let stripped = digits.trim_start_matches('0');
    if stripped.is_empty() {
        return Ok("0".to_string());
    }
    Ok(if neg {
        format!("-{stripped}")
    } else {
        stripped.to_string()
    })
}

fn canonical_boolean(s: &str) -> Result<String, KgError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" => Ok("true".to_string()),
        "false" | "0" => Ok("false".to_string()),
        _ => Err(KgError::BadLiteral(format!("not a boolean: {s:?}"))),
    }
}

fn canonical_decimal_str(s: &str) -> Result<String, KgError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| KgError::BadLiteral(format!("not a decimal: {s:?}")))?;
    render_decimal(v)
}

/// Renders `v` in plain positional notation rounded to [`SIGNIFICANT_DIGITS`]
/// significant digits, trailing zeros (and a trailing point) removed.
pub fn render_decimal(v: f64) -> Result<String, KgError> {
    if !v.is_finite() {
        return Err(KgError::BadLiteral(format!("non-finite decimal {v}")));
    }
    if v == 0.0 {
        return Ok("0".to_string());
    }
    // Scientific formatting does the rounding; we only re-place the point.
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let point = exp + 1; // digits before the decimal point
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(digits);
    } else if point as usize >= digits.len() {
        out.push_str(digits);
        out.extend(std::iter::repeat_n('0', point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    Ok(out)
}

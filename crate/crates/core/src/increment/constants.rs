use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, binom2, int, powi, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Faithful,
    Practical,
}

/// Every constant used by one iteration step, as an exact rational.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantTable {
    pub mode: Mode,
    pub s: usize,
    pub d: usize,
    #[serde(with = "rational::pair")]
    pub delta: Rational,
    /// `c_1 ∈ [x_1, 2x_1]`.
    #[serde(with = "rational::pair")]
    pub x1: Rational,
    /// `c_i ∈ [x_i, 2x_i]` for `i >= 2`.
    #[serde(with = "rational::pair")]
    pub xi: Rational,
    #[serde(with = "rational::pair")]
    pub small: Rational,
    #[serde(with = "rational::pair")]
    pub local_factor: Rational,
    #[serde(with = "rational::pair")]
    pub u2: Rational,
    /// Lower bound on the averaged squared Fourier supremum.
    #[serde(with = "rational::pair")]
    pub eta_sq: Rational,
    /// Density gain required from a translate of some `Λ_i`.
    #[serde(with = "rational::pair")]
    pub inc4: Rational,
    /// Density gain required from a translate of the new Bohr set.
    #[serde(with = "rational::pair")]
    pub inc5: Rational,
    #[serde(with = "rational::pair")]
    pub c_prime: Rational,
    #[serde(with = "rational::pair")]
    pub shrink: Rational,
    #[serde(with = "rational::pair")]
    pub k_bound: Rational,
    #[serde(with = "rational::pair")]
    pub d_bound: Rational,
    /// Names replaced by caller-supplied values.
    pub overrides: Vec<String>,
}

/// Names accepted in an override file.
pub const CONSTANT_NAMES: [&str; 12] = [
    "x1",
    "xi",
    "small",
    "local_factor",
    "u2",
    "eta_sq",
    "inc4",
    "inc5",
    "c_prime",
    "shrink",
    "k_bound",
    "d_bound",
];

/// `2^e` for any integer `e`.
fn two(e: i64) -> Rational {
    powi(&int(2), e)
}

impl ConstantTable {
    pub fn faithful(s: usize, d: usize, delta: &Rational) -> Self {
        let si = s as i64;
        let sq = int(si);
        let dq = int(d as i64);
        let p = si * (si + 1);
        let k = binom2(si + 1);
        ConstantTable {
            mode: Mode::Faithful,
            s,
            d,
            delta: delta.clone(),
            x1: two(-85) * powi(&sq, -24) / &dq * powi(delta, 6 * p),
            xi: two(-20) * powi(&sq, -4) / &dq * powi(delta, p),
            small: int(32) * powi(&sq, 2) * powi(delta, -k),
            local_factor: rational::one() + Rational::new(1.into(), (8 * si * si).into()),
            u2: powi(delta, k) / (int(32) * powi(&sq, 2)),
            eta_sq: two(-46) * powi(&sq, -16) * powi(delta, 4 * p),
            inc4: two(-54) * powi(&sq, -16) * powi(delta, 4 * p),
            inc5: two(-28) * powi(&sq, -8) * powi(delta, 2 * p),
            c_prime: two(-37) * powi(&sq, -8) / &dq * powi(delta, 2 * p),
            shrink: powi(&sq, -100 * si) * powi(&dq, -si) * powi(delta, 10 * si * si * si),
            k_bound: two(55) * powi(&sq, 16) * powi(delta, -4 * p),
            d_bound: two(29) * powi(&sq, 8) * powi(delta, -2 * p),
            overrides: Vec::new(),
        }
    }

    /// The faithful table with `overrides` substituted; an empty map gives
    /// the faithful values in practical mode.
    pub fn practical(s: usize, d: usize, delta: &Rational, overrides: &Overrides) -> Self {
        let mut t = Self::faithful(s, d, delta);
        t.mode = Mode::Practical;
        for (name, v) in &overrides.0 {
            let slot = match name.as_str() {
                "x1" => &mut t.x1,
                "xi" => &mut t.xi,
                "small" => &mut t.small,
                "local_factor" => &mut t.local_factor,
                "u2" => &mut t.u2,
                "eta_sq" => &mut t.eta_sq,
                "inc4" => &mut t.inc4,
                "inc5" => &mut t.inc5,
                "c_prime" => &mut t.c_prime,
                "shrink" => &mut t.shrink,
                "k_bound" => &mut t.k_bound,
                "d_bound" => &mut t.d_bound,
                _ => unreachable!("names are checked on construction"),
            };
            *slot = v.clone();
            t.overrides.push(name.clone());
        }
        t
    }

    pub fn for_mode(mode: Mode, s: usize, d: usize, delta: &Rational, overrides: &Overrides) -> Self {
        match mode {
            Mode::Faithful => Self::faithful(s, d, delta),
            Mode::Practical => Self::practical(s, d, delta, overrides),
        }
    }

    /// Dilation targets `x_1, …, x_s`.
    pub fn xs(&self) -> Vec<Rational> {
        let mut v = vec![self.x1.clone()];
        v.extend(std::iter::repeat(self.xi.clone()).take(self.s - 1));
        v
    }
}

/// Replacement constants keyed by name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides(BTreeMap<String, Rational>);

impl Overrides {
    pub fn new(map: BTreeMap<String, Rational>) -> Result<Self> {
        if let Some(bad) = map.keys().find(|k| !CONSTANT_NAMES.contains(&k.as_str())) {
            return Err(Error::Invalid(format!(
                "unknown constant {bad:?}; expected one of {}",
                CONSTANT_NAMES.join(", ")
            )));
        }
        if let Some((k, v)) = map.iter().find(|(_, v)| v <= &&rational::zero()) {
            return Err(Error::Invalid(format!("constant {k} = {v} must be positive")));
        }
        Ok(Overrides(map))
    }

    /// Parse `{"name": [num, den], ...}`.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Invalid("constant overrides must be a JSON object".into()))?;
        let mut map = BTreeMap::new();
        for (k, x) in obj {
            let q = rational::from_json(x)
                .ok_or_else(|| Error::Invalid(format!("constant {k}: expected [num, den]")))?;
            map.insert(k.clone(), q);
        }
        Self::new(map)
    }

    pub fn get(&self, name: &str) -> Option<&Rational> {
        self.0.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn spot_values() {
        let t = ConstantTable::faithful(2, 1, &rat(1, 2));
        assert_eq!(t.x1, two(-145));
        assert_eq!(t.xi, two(-30));
        assert_eq!(t.small, int(1024));
        assert_eq!(t.local_factor, rat(33, 32));
        assert_eq!(t.inc5, two(-48));
    }

    #[test]
    fn overrides_replace_and_are_recorded() {
        let o = Overrides::from_json(&serde_json::json!({"x1": [1, 8], "small": [3, 1]})).unwrap();
        let t = ConstantTable::practical(2, 1, &rat(1, 3), &o);
        assert_eq!(t.x1, rat(1, 8));
        assert_eq!(t.small, int(3));
        assert_eq!(t.overrides, vec!["small".to_string(), "x1".to_string()]);
        assert!(Overrides::from_json(&serde_json::json!({"bogus": [1, 2]})).is_err());
        assert!(Overrides::from_json(&serde_json::json!({"x1": [0, 2]})).is_err());
    }
}

//! Triangular norms realizing fuzzy intersection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fuzzy::{ensure_same_ground, DiscreteFuzzySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TNorm {
    Minimum,
    Product,
    Lukasiewicz,
    /// `T(a, b) = a` if `b = 1`, `b` if `a = 1`, otherwise 0.
    Drastic,
}

impl TNorm {
    pub const ALL: [TNorm; 4] = [
        TNorm::Minimum,
        TNorm::Product,
        TNorm::Lukasiewicz,
        TNorm::Drastic,
    ];

    /// Applies the T-norm to two degrees, rejecting arguments outside `[0, 1]`.
    pub fn apply(self, a: f64, b: f64) -> Result<f64> {
        for v in [a, b] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!(
                    "t-norm argument {v} is outside [0, 1]"
                )));
            }
        }
        Ok(self.eval(a, b))
    }

    /// Unchecked evaluation; callers guarantee `a, b ∈ [0, 1]`.
    #[inline]
    pub(crate) fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            TNorm::Minimum => a.min(b),
            TNorm::Product => a * b,
            // min - (1 - max) keeps T(a, 1) = a and T(a, b) = T(b, a) exact;
            // 1 - max is exact whenever the result can be positive
            TNorm::Lukasiewicz => (a.min(b) - (1.0 - a.max(b))).max(0.0),
            TNorm::Drastic => {
                if b == 1.0 {
                    a
                } else if a == 1.0 {
                    b
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TNorm::Minimum => "min",
            TNorm::Product => "product",
            TNorm::Lukasiewicz => "lukasiewicz",
            TNorm::Drastic => "drastic",
        }
    }
}

impl fmt::Display for TNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "min" | "minimum" => Ok(TNorm::Minimum),
            "product" | "prod" => Ok(TNorm::Product),
            "lukasiewicz" | "łukasiewicz" => Ok(TNorm::Lukasiewicz),
            "drastic" => Ok(TNorm::Drastic),
            other => Err(Error::config(format!(
                "unknown t-norm {other:?} (expected min, product, lukasiewicz or drastic)"
            ))),
        }
    }
}

impl Serialize for TNorm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for TNorm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Pointwise intersection `(X ∩_T Y)(i) = T(X(i), Y(i))`. Only indices in
/// both supports can be non-zero since `T(a, 0) = 0`.
pub fn intersect(x: &DiscreteFuzzySet, y: &DiscreteFuzzySet, t: TNorm) -> Result<DiscreteFuzzySet> {
    ensure_same_ground(x, y)?;
    let degrees: Vec<(usize, f64)> = x
        .iter()
        .filter_map(|(i, a)| y.degrees().get(&i).map(|&b| (i, t.eval(a, b))))
        .collect();
    DiscreteFuzzySet::new(x.ground().clone(), degrees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::GroundSpace;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn concrete_values() {
        assert_eq!(TNorm::Product.apply(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(TNorm::Lukasiewicz.apply(0.4, 0.5).unwrap(), 0.0);
        assert_eq!(TNorm::Drastic.apply(0.4, 0.5).unwrap(), 0.0);
        assert_eq!(TNorm::Drastic.apply(1.0, 0.5).unwrap(), 0.5);
        assert_eq!(TNorm::Minimum.apply(0.3, 0.7).unwrap(), 0.3);
        assert!(TNorm::Minimum.apply(1.1, 0.2).is_err());
        assert!(TNorm::Product.apply(0.2, -0.0001).is_err());
        assert!(TNorm::Product.apply(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn names_parse_case_insensitively() {
        assert_eq!("MIN".parse::<TNorm>().unwrap(), TNorm::Minimum);
        assert_eq!("Product".parse::<TNorm>().unwrap(), TNorm::Product);
        assert_eq!("LUKASIEWICZ".parse::<TNorm>().unwrap(), TNorm::Lukasiewicz);
        assert_eq!("drastic".parse::<TNorm>().unwrap(), TNorm::Drastic);
        assert!("frank".parse::<TNorm>().is_err());
        let json = serde_json::to_string(&TNorm::Lukasiewicz).unwrap();
        assert_eq!(json, "\"lukasiewicz\"");
        assert_eq!(
            serde_json::from_str::<TNorm>("\"Min\"").unwrap(),
            TNorm::Minimum
        );
    }

    fn ground() -> Arc<GroundSpace> {
        Arc::new(GroundSpace::from_scalars(&[0.0, 1.0, 2.0]).unwrap())
    }

    #[test]
    fn intersect_examples() {
        let g = ground();
        let x = DiscreteFuzzySet::new(g.clone(), [(0, 0.8)]).unwrap();
        let y = DiscreteFuzzySet::new(g.clone(), [(0, 0.5)]).unwrap();
        let r = intersect(&x, &y, TNorm::Minimum).unwrap();
        assert_eq!(r.iter().collect::<Vec<_>>(), vec![(0, 0.5)]);

        let y2 = DiscreteFuzzySet::new(g.clone(), [(1, 0.5)]).unwrap();
        for t in TNorm::ALL {
            assert!(intersect(&x, &y2, t).unwrap().is_empty());
        }

        let x = DiscreteFuzzySet::new(g.clone(), [(0, 0.6), (1, 0.9)]).unwrap();
        let y = DiscreteFuzzySet::new(g, [(1, 0.9), (2, 0.3)]).unwrap();
        let r = intersect(&x, &y, TNorm::Product).unwrap();
        let v: Vec<_> = r.iter().collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].0, 1);
        assert!((v[0].1 - 0.81).abs() < 1e-15);
    }

    #[test]
    fn intersect_rejects_foreign_ground() {
        let x = DiscreteFuzzySet::new(ground(), [(0, 0.8)]).unwrap();
        let other = Arc::new(GroundSpace::from_scalars(&[5.0]).unwrap());
        let y = DiscreteFuzzySet::new(other, [(0, 0.5)]).unwrap();
        assert!(intersect(&x, &y, TNorm::Minimum).is_err());
    }

    fn tnorm() -> impl Strategy<Value = TNorm> {
        prop_oneof![
            Just(TNorm::Minimum),
            Just(TNorm::Product),
            Just(TNorm::Lukasiewicz),
            Just(TNorm::Drastic)
        ]
    }

    // Mix of interior values and the boundary points 0 and 1, which the
    // drastic case split depends on.
    fn degree() -> impl Strategy<Value = f64> {
        prop_oneof![3 => 0.0..=1.0f64, 1 => Just(0.0), 1 => Just(1.0)]
    }

    proptest! {
        #[test]
        fn stays_in_unit_interval(t in tnorm(), a in degree(), b in degree()) {
            let v = t.apply(a, b).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn ordering_drastic_lukasiewicz_product_minimum(a in degree(), b in degree()) {
            let d = TNorm::Drastic.eval(a, b);
            let l = TNorm::Lukasiewicz.eval(a, b);
            let p = TNorm::Product.eval(a, b);
            let m = TNorm::Minimum.eval(a, b);
            prop_assert!(d <= l + 1e-15);
            prop_assert!(l <= p + 1e-15);
            prop_assert!(p <= m);
        }

        #[test]
        fn intersection_support_is_within_both_supports(
            t in tnorm(),
            xs in proptest::collection::vec(degree(), 6),
            ys in proptest::collection::vec(degree(), 6),
        ) {
            let g = Arc::new(GroundSpace::from_scalars(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap());
            let x = DiscreteFuzzySet::new(g.clone(), xs.into_iter().enumerate()).unwrap();
            let y = DiscreteFuzzySet::new(g, ys.into_iter().enumerate()).unwrap();
            let r = intersect(&x, &y, t).unwrap();
            for i in r.support() {
                prop_assert!(x.contains(i) && y.contains(i));
                prop_assert_eq!(r.membership(i).unwrap(), t.apply(x.membership(i).unwrap(), y.membership(i).unwrap()).unwrap());
            }
        }
    }
}

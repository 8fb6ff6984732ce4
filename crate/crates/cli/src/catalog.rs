//! Built-in surfaces.

use crparallax_core::dsl::{parse, Expr, SurfaceSpec};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::points::PointSpec;

const LIGHTCONE: &str = include_str!("../surfaces/lightcone.surf");
const SPHERELIKE: &str = include_str!("../surfaces/spherelike.surf");
const CYLINDERLIKE: &str = include_str!("../surfaces/cylinderlike.surf");
const CONE_QUARTIC: &str = include_str!("../surfaces/cone-quartic.surf");

/// Holomorphic function used for the shear image of the light-cone model.
pub const SHEAR: &str = "(1/10)*z1*z2";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    /// Where the surface is admissible, when that is not "near the origin".
    pub note: Option<&'static str>,
    /// Default sampling center as a point string.
    pub center: Option<&'static str>,
}

pub const ENTRIES: [CatalogEntry; 6] = [
    CatalogEntry {
        name: "lightcone",
        summary: "flat model, J = W = 0",
        note: None,
        center: None,
    },
    CatalogEntry {
        name: "lightcone-sheared",
        summary: "image of lightcone under (z, w) -> (z, w + g(z)), g = (1/10) z1 z2",
        note: None,
        center: None,
    },
    CatalogEntry {
        name: "spherelike",
        summary: "z1 zb1 + z2 zb2, Levi nondegenerate (negative control)",
        note: None,
        center: None,
    },
    CatalogEntry {
        name: "cylinderlike",
        summary: "z1 zb1, Levi rank 1 but 2-degenerate (negative control)",
        note: None,
        center: None,
    },
    CatalogEntry {
        name: "cone-quartic",
        summary: "tube over x2 (x1/x2)^4, non-flat",
        note: Some("admissible where x2 != 0; sampled around z1 = z2 = 1"),
        center: Some("z1=1,z2=1"),
    },
    CatalogEntry {
        name: "random-tube",
        summary: "seeded tube x2 g(x1/x2), g a random rational quartic with g'' != 0",
        note: Some("admissible where x2 != 0 and g''(x1/x2) != 0; sampled around z1 = z2 = 1"),
        center: Some("z1=1,z2=1"),
    },
];

pub fn entry(name: &str) -> Option<&'static CatalogEntry> {
    ENTRIES.iter().find(|e| e.name == name)
}

pub fn default_center(name: &str) -> PointSpec {
    entry(name)
        .and_then(|e| e.center)
        .map(|c| PointSpec::parse(c).expect("catalog centers parse"))
        .unwrap_or_default()
}

/// Loads a catalog surface. `seed` only affects `random-tube`.
pub fn load(name: &str, seed: u64) -> Option<SurfaceSpec> {
    let parsed = |text: &str| SurfaceSpec::parse(text, name).expect("catalog surfaces parse");
    Some(match name {
        "lightcone" => parsed(LIGHTCONE),
        "spherelike" => parsed(SPHERELIKE),
        "cylinderlike" => parsed(CYLINDERLIKE),
        "cone-quartic" => parsed(CONE_QUARTIC),
        "lightcone-sheared" => SurfaceSpec::from_expr(name, sheared(&parsed(LIGHTCONE).expr, SHEAR)),
        "random-tube" => random_tube(seed),
        _ => return None,
    })
}

/// `F(z, v - im g) + re g`: the graph of `F` pushed through the
/// biholomorphism `w -> w + g(z)`.
pub fn sheared(f: &Expr, g: &str) -> Expr {
    let g = parse(g).expect("shear function parses");
    let v = Expr::sub(parse("v").unwrap(), Expr::im(g.clone()));
    Expr::add(f.substitute_v(&v), Expr::re(g))
}

/// Coefficients `c_0..c_4` of `g`, lowest degree first.
pub fn random_tube_coeffs(seed: u64) -> [BigRational; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    loop {
        let c: [BigRational; 5] = core::array::from_fn(|_| {
            BigRational::new(BigInt::from(rng.random_range(-5i64..=5)), BigInt::from(rng.random_range(1i64..=4)))
        });
        if second_derivative_bounded_away(&c) {
            return c;
        }
    }
}

// g'' at least 1/2 in modulus on t in [1/2, 2], where samples near (1, 1) land.
fn second_derivative_bounded_away(c: &[BigRational; 5]) -> bool {
    (0..=30).all(|s| {
        let t = 0.5 + 1.5 * s as f64 / 30.0;
        let g2: f64 = (2..5)
            .map(|n| (n * (n - 1)) as f64 * c[n].to_f64().unwrap() * t.powi(n as i32 - 2))
            .sum();
        g2.abs() >= 0.5
    })
}

pub fn random_tube_text(c: &[BigRational; 5]) -> String {
    let mut terms = Vec::new();
    for (n, cn) in c.iter().enumerate() {
        if cn.is_zero() {
            continue;
        }
        let coef = if cn.is_integer() {
            format!("({})", cn.numer())
        } else {
            format!("({}/{})", cn.numer(), cn.denom())
        };
        let coef = if cn.is_negative() { format!("({coef})") } else { coef };
        terms.push(match n {
            0 => coef,
            1 => format!("{coef}*(re(z1)/re(z2))"),
            _ => format!("{coef}*(re(z1)/re(z2))^{n}"),
        });
    }
    format!("re(z2)*({})", terms.join(" + "))
}

pub fn random_tube(seed: u64) -> SurfaceSpec {
    let text = random_tube_text(&random_tube_coeffs(seed));
    let mut spec = SurfaceSpec::parse(&text, "random-tube").expect("generated tube parses");
    spec.name = format!("random-tube(seed={seed})");
    spec
}

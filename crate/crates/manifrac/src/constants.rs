//! Dimensional constants: sphere areas, ball volumes, and the normalized
//! directional moment of the unit sphere that scales every limit identity.

use statrs::function::gamma::ln_gamma;

use crate::numerics::adaptive_simpson;

/// Hausdorff measure of the unit sphere `{x in R^n : |x| = 1}` in its
/// natural (n-1)-dimensional measure: `2 pi^{n/2} / Gamma(n/2)`.
///
/// For `n = 1` this is the counting measure of the two points `{-1, +1}`.
pub fn sphere_area(n: u32) -> f64 {
    assert!(n >= 1, "sphere_area: n must be >= 1");
    let half = n as f64 / 2.0;
    2.0 * (half * std::f64::consts::PI.ln() - ln_gamma(half)).exp()
}

/// Lebesgue measure of the k-dimensional Euclidean unit ball:
/// `pi^{k/2} / Gamma(k/2 + 1)`, with `|B^0| = 1` by convention.
pub fn ball_volume(k: u32) -> f64 {
    let half = k as f64 / 2.0;
    (half * std::f64::consts::PI.ln() - ln_gamma(half + 1.0)).exp()
}

/// Normalized p-th absolute moment of a fixed coordinate over the unit
/// sphere in `R^n`:
///
/// ```text
/// (1 / area) * integral over {|u| = 1} of |e . u|^p
/// ```
///
/// for any unit vector `e`. Computed by reducing to a one-dimensional
/// integral in the polar angle and integrating adaptively; `n = 1` is the
/// two-point sphere and gives exactly 1 for every p.
pub fn sphere_coordinate_moment(p: f64, n: u32) -> f64 {
    assert!(p >= 1.0, "sphere_coordinate_moment: p must be >= 1");
    assert!(n >= 1, "sphere_coordinate_moment: n must be >= 1");
    if n == 1 {
        return 1.0;
    }
    let m = n as f64;
    // area(S^{n-2}) / area(S^{n-1}) * 2 * int_0^{pi/2} cos^p sin^{n-2}
    let ratio = sphere_area(n - 1) / sphere_area(n);
    let integral = 2.0
        * adaptive_simpson(
            |theta: f64| theta.cos().powf(p) * theta.sin().powf(m - 2.0),
            0.0,
            std::f64::consts::FRAC_PI_2,
            1e-13,
        );
    ratio * integral
}

/// Closed-form candidate for [`sphere_coordinate_moment`]:
/// `Gamma((p+1)/2) Gamma(n/2) / (sqrt(pi) Gamma((n+p)/2))`.
///
/// Derived, not definitional; the tests validate it against the quadrature
/// before anything else trusts it.
pub fn sphere_coordinate_moment_closed_form(p: f64, n: u32) -> f64 {
    assert!(p >= 1.0 && n >= 1);
    let m = n as f64;
    (ln_gamma((p + 1.0) / 2.0) + ln_gamma(m / 2.0)
        - 0.5 * std::f64::consts::PI.ln()
        - ln_gamma((m + p) / 2.0))
    .exp()
}

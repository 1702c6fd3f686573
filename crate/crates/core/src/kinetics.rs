//! Reaction terms of the supported polarity models.
//!
//! All three are written as `f(u, v)` in `u_t = DΔu + f`, `τv_t = Δv − f`:
//!
//! * model 1: `f = h(u) + k·v` with `h(u) = −a·u / (u² + b)`;
//! * model 2: `f = h(u + v) + α₁·v` with `h(z) = −α₁·z / (α₂·z + 1)²`;
//! * model 4: `f = v·a(u) − δ·u` with the Hill activation
//!   `a(u) = b·(γ·uᵐ / (kᵐ + uᵐ) + k₀)`, `m = 2` by default.

use libm::{atan, log1p, pow};

use crate::error::{nonnegative, positive, Error, Result};
use crate::quadrature::adaptive_simpson;

const PRIMITIVE_TOL: f64 = 1e-12;

fn check_arg(name: &'static str, value: f64) -> Result<f64> {
    if value.is_nan() {
        Err(Error::NonFinite { what: name })
    } else if value < 0.0 {
        Err(Error::NegativeArgument { name, value })
    } else {
        Ok(value)
    }
}

/// Parameters of model 4.
///
/// Symbols: `diffusion` = D, `b`, `gamma` = γ, `k` (half-saturation),
/// `k0` = k₀ (basal rate), `delta` = δ, `hill_exponent` = m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model4Params {
    pub diffusion: f64,
    pub tau: f64,
    pub b: f64,
    pub gamma: f64,
    pub k: f64,
    pub k0: f64,
    pub delta: f64,
    pub hill_exponent: f64,
}

impl Default for Model4Params {
    fn default() -> Self {
        Self {
            diffusion: 4.0,
            tau: 1.0,
            b: 1.0,
            gamma: 1.0,
            k: 1.0,
            k0: 0.1,
            delta: 1.0,
            hill_exponent: 2.0,
        }
    }
}

impl Model4Params {
    /// Validated constructor with `m = 2`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        diffusion: f64,
        tau: f64,
        b: f64,
        gamma: f64,
        k: f64,
        k0: f64,
        delta: f64,
    ) -> Result<Self> {
        let p = Self {
            diffusion,
            tau,
            b,
            gamma,
            k,
            k0,
            delta,
            hill_exponent: 2.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_hill_exponent(mut self, m: f64) -> Result<Self> {
        self.hill_exponent = m;
        self.validate()?;
        Ok(self)
    }

    /// `D, τ, k > 0`, `b, γ, k₀, δ ≥ 0`, `m ≥ 2`. Zero rates are admitted so
    /// that the constant-activation (`γ = 0`) and pure-diffusion
    /// (`b = δ = 0`) limits stay expressible.
    pub fn validate(&self) -> Result<()> {
        positive("D", self.diffusion)?;
        positive("tau", self.tau)?;
        positive("k", self.k)?;
        nonnegative("b", self.b)?;
        nonnegative("gamma", self.gamma)?;
        nonnegative("k0", self.k0)?;
        nonnegative("delta", self.delta)?;
        if !(self.hill_exponent.is_finite() && self.hill_exponent >= 2.0) {
            return Err(Error::InvalidParameter {
                name: "m",
                value: self.hill_exponent,
                reason: "Hill exponent must be >= 2",
            });
        }
        Ok(())
    }

    /// ξ = 1 − τD.
    pub fn xi(&self) -> f64 {
        1.0 - self.tau * self.diffusion
    }

    /// Lower bound a₀ = b·k₀ of the activation.
    pub fn a0(&self) -> f64 {
        self.b * self.k0
    }

    /// Upper bound a₁ = b·(γ + k₀) of the activation.
    pub fn a1(&self) -> f64 {
        self.b * (self.gamma + self.k0)
    }

    fn is_quadratic(&self) -> bool {
        self.hill_exponent == 2.0
    }

    /// uᵐ / (kᵐ + uᵐ) for u ≥ 0.
    fn hill(&self, u: f64) -> f64 {
        let s = u / self.k;
        if self.is_quadratic() {
            let s2 = s * s;
            return if s2.is_finite() { s2 / (1.0 + s2) } else { 1.0 };
        }
        if s <= 1.0 {
            let r = pow(s, self.hill_exponent);
            r / (1.0 + r)
        } else {
            1.0 / (1.0 + pow(1.0 / s, self.hill_exponent))
        }
    }

    /// a(u); `u` must be nonnegative.
    pub fn activation(&self, u: f64) -> Result<f64> {
        Ok(self.activation_unchecked(check_arg("u", u)?))
    }

    /// a(u) with negative round-off clipped to zero.
    pub fn activation_unchecked(&self, u: f64) -> f64 {
        self.b * (self.gamma * self.hill(u.max(0.0)) + self.k0)
    }

    /// a′(u) = b·γ·m·kᵐ·uᵐ⁻¹ / (kᵐ + uᵐ)².
    pub fn activation_slope(&self, u: f64) -> Result<f64> {
        Ok(self.activation_slope_unchecked(check_arg("u", u)?))
    }

    pub fn activation_slope_unchecked(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        let m = self.hill_exponent;
        let s = u / self.k;
        if s == 0.0 {
            return 0.0;
        }
        // a′ = bγm/k · s^{m−1} / (1 + s^m)²
        let bgm = self.b * self.gamma * m / self.k;
        if s <= 1.0 {
            let sm1 = if self.is_quadratic() {
                s
            } else {
                pow(s, m - 1.0)
            };
            let sm = sm1 * s;
            bgm * sm1 / ((1.0 + sm) * (1.0 + sm))
        } else {
            // divide through by s^{2m}: s^{-m-1} / (s^{-m} + 1)²
            let t = 1.0 / s;
            let tm = if self.is_quadratic() {
                t * t
            } else {
                pow(t, m)
            };
            bgm * tm * t / ((1.0 + tm) * (1.0 + tm))
        }
    }

    /// Location of sup a′: uᵐ = kᵐ(m − 1)/(m + 1).
    pub fn slope_argmax(&self) -> f64 {
        let m = self.hill_exponent;
        self.k * pow((m - 1.0) / (m + 1.0), 1.0 / m)
    }

    /// sup_{u>0} a′(u) = b·γ·m·r^{(m−1)/m} / (k·(1 + r)²) with
    /// r = (m − 1)/(m + 1); equals 3√3·bγ/(8k) for m = 2.
    pub fn slope_sup(&self) -> f64 {
        let m = self.hill_exponent;
        let r = (m - 1.0) / (m + 1.0);
        self.b * self.gamma * m * pow(r, (m - 1.0) / m) / (self.k * (1.0 + r) * (1.0 + r))
    }

    /// f(u, v) = v·a(u) − δu.
    pub fn reaction(&self, u: f64, v: f64) -> Result<f64> {
        check_arg("u", u)?;
        check_arg("v", v)?;
        Ok(self.reaction_unchecked(u, v))
    }

    pub fn reaction_unchecked(&self, u: f64, v: f64) -> f64 {
        v * self.activation_unchecked(u) - self.delta * u
    }

    /// Right side of the reduced homogeneous ODE,
    /// `G′(U) = −δU + a(U)(λ − U)/τ`.
    pub fn reduced_rate(&self, lambda: f64, u: f64) -> f64 {
        -self.delta * u + self.activation_unchecked(u) * (lambda - u) / self.tau
    }

    /// G(U) = ∫₀ᵁ G′, closed form for m = 2, quadrature otherwise.
    pub fn reduced_primitive(&self, lambda: f64, u: f64) -> Result<f64> {
        check_arg("U", u)?;
        if self.is_quadratic() {
            Ok(self.reduced_primitive_closed(lambda, u))
        } else {
            self.reduced_primitive_quadrature(lambda, u)
        }
    }

    pub fn reduced_primitive_quadrature(&self, lambda: f64, u: f64) -> Result<f64> {
        check_arg("U", u)?;
        adaptive_simpson(|s| self.reduced_rate(lambda, s), 0.0, u, PRIMITIVE_TOL)
    }

    fn reduced_primitive_closed(&self, lambda: f64, u: f64) -> f64 {
        // a(s)(λ − s) = a₁(λ − s) − bγk²(λ − s)/(k² + s²)
        let k = self.k;
        let s = u / k;
        let saturating = self.b * self.gamma * k * (lambda * atan(s) - 0.5 * k * log1p(s * s));
        (self.a1() * (lambda * u - 0.5 * u * u) - saturating) / self.tau - 0.5 * self.delta * u * u
    }
}

/// Parameters of model 1: `h(u) = −strength·u / (u² + offset)`, coupling k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model1Params {
    pub diffusion: f64,
    pub tau: f64,
    pub strength: f64,
    pub offset: f64,
    pub coupling: f64,
}

impl Model1Params {
    pub fn new(
        diffusion: f64,
        tau: f64,
        strength: f64,
        offset: f64,
        coupling: f64,
    ) -> Result<Self> {
        let p = Self {
            diffusion,
            tau,
            strength,
            offset,
            coupling,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("D", self.diffusion)?;
        positive("tau", self.tau)?;
        positive("a", self.strength)?;
        positive("b", self.offset)?;
        positive("k", self.coupling)?;
        Ok(())
    }

    /// ξ = 1 − τD.
    pub fn xi(&self) -> f64 {
        1.0 - self.tau * self.diffusion
    }

    pub fn h(&self, u: f64) -> f64 {
        -self.strength * u / (u * u + self.offset)
    }

    /// q(u) = h(u) − kDu.
    pub fn q(&self, u: f64) -> f64 {
        self.h(u) - self.coupling * self.diffusion * u
    }

    pub fn reaction(&self, u: f64, v: f64) -> Result<f64> {
        check_arg("u", u)?;
        check_arg("v", v)?;
        Ok(self.reaction_unchecked(u, v))
    }

    pub fn reaction_unchecked(&self, u: f64, v: f64) -> f64 {
        self.h(u) + self.coupling * v
    }

    /// Q(u) = −(a/2)·ln(1 + u²/b) − kDu²/2, so that Q′ = q and Q(0) = 0.
    pub fn q_primitive(&self, u: f64) -> f64 {
        -0.5 * self.strength * log1p(u * u / self.offset)
            - 0.5 * self.coupling * self.diffusion * u * u
    }

    pub fn q_primitive_quadrature(&self, u: f64) -> Result<f64> {
        check_arg("u", u)?;
        adaptive_simpson(|s| self.q(s), 0.0, u, PRIMITIVE_TOL)
    }
}

/// Parameters of model 2: `h(z) = −exchange·z / (saturation·z + 1)²`;
/// `exchange` = α₁, `saturation` = α₂. Requires τ ≠ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model2Params {
    pub diffusion: f64,
    pub tau: f64,
    pub exchange: f64,
    pub saturation: f64,
}

impl Model2Params {
    pub fn new(diffusion: f64, tau: f64, exchange: f64, saturation: f64) -> Result<Self> {
        let p = Self {
            diffusion,
            tau,
            exchange,
            saturation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("D", self.diffusion)?;
        positive("tau", self.tau)?;
        positive("alpha1", self.exchange)?;
        positive("alpha2", self.saturation)?;
        if self.tau == 1.0 {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: self.tau,
                reason: "model 2 requires tau != 1",
            });
        }
        Ok(())
    }

    /// ξ = (1 − τD)/(τ − 1).
    pub fn xi(&self) -> f64 {
        (1.0 - self.tau * self.diffusion) / (self.tau - 1.0)
    }

    /// α = (1 − D)/(τ − 1).
    pub fn alpha(&self) -> f64 {
        (1.0 - self.diffusion) / (self.tau - 1.0)
    }

    /// Coupling constant k of the Lyapunov functional; identified with α₁.
    pub fn coupling(&self) -> f64 {
        self.exchange
    }

    pub fn h(&self, z: f64) -> f64 {
        let d = self.saturation * z + 1.0;
        -self.exchange * z / (d * d)
    }

    /// g(z) = (1 − D)h(z) − α₁Dz.
    pub fn g(&self, z: f64) -> f64 {
        (1.0 - self.diffusion) * self.h(z) - self.exchange * self.diffusion * z
    }

    pub fn reaction(&self, u: f64, v: f64) -> Result<f64> {
        check_arg("u", u)?;
        check_arg("v", v)?;
        Ok(self.reaction_unchecked(u, v))
    }

    pub fn reaction_unchecked(&self, u: f64, v: f64) -> f64 {
        self.h(u + v) + self.exchange * v
    }

    /// G(z) = ∫₀ᶻ g, using ∫₀ᶻ h = −(α₁/α₂²)(ln(1 + α₂z) − α₂z/(1 + α₂z)).
    pub fn g_primitive(&self, z: f64) -> Result<f64> {
        check_arg("z", z)?;
        Ok(self.g_primitive_unchecked(z))
    }

    /// [`Self::g_primitive`] without the sign check; valid for `α₂z > −1`.
    pub fn g_primitive_unchecked(&self, z: f64) -> f64 {
        let s = self.saturation * z;
        let h_int =
            -self.exchange / (self.saturation * self.saturation) * (log1p(s) - s / (1.0 + s));
        (1.0 - self.diffusion) * h_int - 0.5 * self.exchange * self.diffusion * z * z
    }

    pub fn g_primitive_quadrature(&self, z: f64) -> Result<f64> {
        check_arg("z", z)?;
        adaptive_simpson(|s| self.g(s), 0.0, z, PRIMITIVE_TOL)
    }
}

/// One of the supported models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Model1(Model1Params),
    Model2(Model2Params),
    Model4(Model4Params),
}

impl ModelParams {
    pub fn diffusion(&self) -> f64 {
        match self {
            ModelParams::Model1(p) => p.diffusion,
            ModelParams::Model2(p) => p.diffusion,
            ModelParams::Model4(p) => p.diffusion,
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            ModelParams::Model1(p) => p.tau,
            ModelParams::Model2(p) => p.tau,
            ModelParams::Model4(p) => p.tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Model1(p) => p.validate(),
            ModelParams::Model2(p) => p.validate(),
            ModelParams::Model4(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::Model1(_) => "model1",
            ModelParams::Model2(_) => "model2",
            ModelParams::Model4(p) if p.hill_exponent != 2.0 => "model4-general-m",
            ModelParams::Model4(_) => "model4",
        }
    }

    /// f(u, v) without domain checks; negative round-off is tolerated.
    pub fn reaction(&self, u: f64, v: f64) -> f64 {
        match self {
            ModelParams::Model1(p) => p.reaction_unchecked(u, v),
            ModelParams::Model2(p) => p.reaction_unchecked(u, v),
            ModelParams::Model4(p) => p.reaction_unchecked(u, v),
        }
    }

    /// `f(0, v) ≥ 0 ≥ f(u, 0)` at one pair of boundary points.
    pub fn quasi_positive_at(&self, u: f64, v: f64) -> bool {
        self.reaction(0.0, v) >= 0.0 && self.reaction(u, 0.0) <= 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ref4() -> Model4Params {
        Model4Params::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn activation_limits() {
        let p = Model4Params::new(1.0, 1.0, 2.0, 3.0, 0.5, 0.25, 1.0).unwrap();
        assert_eq!(p.activation(0.0).unwrap(), p.a0());
        assert_relative_eq!(
            p.activation(0.5).unwrap(),
            2.0 * (1.5 + 0.25),
            max_relative = 1e-15
        );
        assert_relative_eq!(p.activation(1e9).unwrap(), p.a1(), max_relative = 1e-12);
        assert_eq!(p.activation(f64::INFINITY).unwrap(), p.a1());
        assert!(p.activation(-1e-3).is_err());
        assert!(p.activation_slope(-1.0).is_err());
        assert_eq!(p.activation_slope(0.0).unwrap(), 0.0);
    }

    #[test]
    fn slope_matches_quadratic_formula() {
        let p = ref4();
        for u in [0.1, 0.5, 1.0, 2.0, 7.0] {
            let expected = 2.0 * p.b * p.gamma * p.k * p.k * u / ((p.k * p.k + u * u).powi(2));
            assert_relative_eq!(
                p.activation_slope(u).unwrap(),
                expected,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn slope_is_derivative_for_general_m() {
        let p = ref4().with_hill_exponent(3.5).unwrap();
        for u in [0.05, 0.3, 0.9, 1.7, 4.0] {
            let eps = 1e-6 * u;
            let fd =
                (p.activation(u + eps).unwrap() - p.activation(u - eps).unwrap()) / (2.0 * eps);
            assert_relative_eq!(p.activation_slope(u).unwrap(), fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn slope_sup_by_grid_scan() {
        // brute-force maximization over 10⁶ points on (0, 10k)
        for (k, m) in [(1.0, 2.0), (0.37, 2.0), (2.0, 3.0), (1.3, 4.5)] {
            let p = Model4Params {
                k,
                hill_exponent: m,
                gamma: 1.7,
                b: 0.8,
                ..ref4()
            };
            let n = 1_000_000;
            let (mut best, mut at) = (0.0, 0.0);
            for i in 1..=n {
                let u = 10.0 * k * i as f64 / n as f64;
                let s = p.activation_slope_unchecked(u);
                if s > best {
                    best = s;
                    at = u;
                }
            }
            assert_relative_eq!(p.slope_sup(), best, max_relative = 1e-9);
            assert!((p.slope_argmax() - at).abs() <= 10.0 * k / n as f64);
        }
        let p = ref4();
        assert_relative_eq!(p.slope_argmax(), 1.0 / 3f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(p.slope_sup(), 3.0 * 3f64.sqrt() / 8.0, max_relative = 1e-15);
    }

    #[test]
    fn slope_sup_bounds_random_samples() {
        let p = ref4();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let u: f64 = rng.gen_range(0.0..50.0);
            assert!(p.activation_slope(u).unwrap() <= p.slope_sup());
        }
    }

    #[test]
    fn reaction_values() {
        let p = ref4();
        assert_eq!(p.reaction(0.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            p.reaction(0.0, 3.0).unwrap(),
            3.0 * p.a0(),
            max_relative = 1e-15
        );
        assert_eq!(p.reaction(2.0, 0.0).unwrap(), -2.0);
        assert!(p.reaction(-1.0, 0.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(Model4Params::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.1, -1.0).is_err());
        assert!(Model4Params::new(0.0, 1.0, 1.0, 1.0, 1.0, 0.1, 1.0).is_err());
        assert!(Model4Params::new(1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0).is_ok());
        assert!(ref4().with_hill_exponent(1.5).is_err());
        assert!(Model2Params::new(0.5, 1.0, 1.0, 1.0).is_err());
        assert!(Model1Params::new(0.5, 1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn reduced_primitive_closed_form_vs_quadrature() {
        let p = Model4Params::new(1.0, 0.7, 1.3, 2.0, 0.8, 0.2, 0.6).unwrap();
        for u in [0.0, 0.01, 0.4, 1.1, 2.9] {
            let a = p.reduced_primitive(3.0, u).unwrap();
            let b = p.reduced_primitive_quadrature(3.0, u).unwrap();
            assert!((a - b).abs() < 1e-10, "{u}: {a} vs {b}");
        }
        assert_eq!(p.reduced_primitive(3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn model1_primitive_closed_form_vs_quadrature() {
        let p = Model1Params::new(0.3, 1.2, 2.0, 0.5, 1.0).unwrap();
        for u in [0.0, 0.2, 1.0, 3.5, 10.0] {
            let exact = p.q_primitive(u);
            assert!((exact - p.q_primitive_quadrature(u).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn model2_primitive_closed_form_vs_quadrature() {
        let p = Model2Params::new(0.2, 2.0, 1.5, 0.7).unwrap();
        for z in [0.0, 0.3, 1.0, 4.0] {
            let exact = p.g_primitive(z).unwrap();
            assert!((exact - p.g_primitive_quadrature(z).unwrap()).abs() < 1e-10);
        }
        assert_relative_eq!(p.xi(), 0.6, max_relative = 1e-15);
        assert_relative_eq!(p.alpha(), 0.8, max_relative = 1e-15);
    }

    #[test]
    fn model_names() {
        let p = ref4();
        assert_eq!(ModelParams::Model4(p).name(), "model4");
        assert_eq!(
            ModelParams::Model4(p.with_hill_exponent(3.0).unwrap()).name(),
            "model4-general-m"
        );
    }
}

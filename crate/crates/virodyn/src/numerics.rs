//! Small root-finding and minimisation helpers used by the analysis layer.
//!
//! All routines are deterministic and allocation-free. They expect a valid
//! bracket and tighten it; callers are responsible for the scan that finds
//! the bracket in the first place.

/// Bisection on a sign change. Requires f(lo) and f(hi) with opposite signs
/// (zero counts as either). Returns the midpoint of the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    let fhi = f(hi);
    debug_assert!(
        flo == 0.0 || fhi == 0.0 || (flo > 0.0) != (fhi > 0.0),
        "bisect needs a sign change, got f({lo}) = {flo}, f({hi}) = {fhi}"
    );
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    // 200 halvings take any f64 bracket to adjacent floats
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A few Newton steps to polish a bisection root; falls back to the input
/// when the derivative is too small or the step leaves the bracket.
pub fn newton_polish<F, G>(mut f: F, mut df: G, x0: f64, lo: f64, hi: f64) -> f64
where
    F: FnMut(f64) -> f64,
    G: FnMut(f64) -> f64,
{
    let mut x = x0;
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        let next = x - step;
        if !next.is_finite() || next < lo || next > hi {
            break;
        }
        if next == x {
            break;
        }
        x = next;
    }
    x
}

/// Golden-section minimisation of a unimodal function on [a, b].
/// Returns (argmin, min). About 80 evaluations pin the argmin to ~1e-12
/// relative; the minimum value itself is far better conditioned.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..160 {
        if (b - a).abs() < 1e-15 * (a.abs() + b.abs() + 1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// b^2 - 4ac evaluated with compensated products (FMA residuals), plus a
/// conservative bound on the evaluation error. Near a double root the naive
/// expression loses every significant digit; the compensation recovers the
/// sign down to ~1e-16 * b^2 scale.
pub fn compensated_discriminant(a: f64, b: f64, c: f64) -> (f64, f64) {
    let p = b * b;
    let dp = f64::mul_add(b, b, -p);
    let r = 4.0 * a; // power-of-two scale, exact
    let q = r * c;
    let dq = f64::mul_add(r, c, -q);
    let d = (p - q) + (dp - dq);
    let eps = f64::EPSILON;
    let err = eps * ((p - q).abs() + 4.0 * eps * (p.abs() + q.abs()) + d.abs());
    (d, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_cubic_root() {
        let root = bisect(|x| x * x * x - 2.0, 0.0, 2.0);
        assert!((root - 2.0f64.powf(1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn newton_polish_sharpens() {
        let rough = 1.2599;
        let x = newton_polish(|x| x * x * x - 2.0, |x| 3.0 * x * x, rough, 1.0, 2.0);
        assert!((x - 2.0f64.powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn golden_min_on_parabola() {
        let (x, fx) = golden_min(|x| (x - 0.3) * (x - 0.3) + 1.0, -1.0, 2.0);
        // the argmin of a flat parabola is conditioned like sqrt(eps)
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn discriminant_sign_near_double_root() {
        // (x - 1)^2 scaled: b^2 - 4ac = 0 exactly in reals
        let (d, err) = compensated_discriminant(1.0, -2.0, 1.0);
        assert_eq!(d, 0.0);
        assert!(err >= 0.0);

        // perturb c the smallest possible amount: sign must be resolved
        let c = 1.0 + f64::EPSILON;
        let (d, err) = compensated_discriminant(1.0, -2.0, c);
        assert!(d < 0.0);
        assert!(d.abs() <= 4.0 * f64::EPSILON + err);

        // catastrophic cancellation: b = 2^27 + 1, c = 2^52 + 2^26, so
        // b^2 - 4c = 1 exactly, but fl(b^2) - fl(4c) = 0
        let b = 134217729.0;
        let c = 4503599627370496.0 + 67108864.0;
        let naive = b * b - 4.0 * c;
        assert_eq!(naive, 0.0);
        let (comp, err) = compensated_discriminant(1.0, b, c);
        assert_eq!(comp, 1.0);
        assert!(err < 16.0); // bound stays near eps * b^2
    }

}

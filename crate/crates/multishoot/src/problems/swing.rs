//! Analytic quintic swing-foot profiles.

/// Quintic rest-to-rest interpolation s(t): s(0) = 0, s(T) = 1 with zero
/// boundary velocity and acceleration.
fn quintic(t: f64, duration: f64) -> (f64, f64) {
    let s = (t / duration).clamp(0.0, 1.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let pos = 10.0 * s3 - 15.0 * s2 * s2 + 6.0 * s2 * s3;
    let vel = (30.0 * s2 - 60.0 * s3 + 30.0 * s2 * s2) / duration;
    (pos, vel)
}

/// Swing trajectory from `start` to `end` with a parabolic apex of height
/// `apex` above the chord. Returns (position, velocity) at time `t`.
pub fn swing_profile(
    start: [f64; 2],
    end: [f64; 2],
    apex: f64,
    duration: f64,
    t: f64,
) -> ([f64; 2], [f64; 2]) {
    let (s, sdot) = quintic(t, duration);
    let px = start[0] + (end[0] - start[0]) * s;
    let vx = (end[0] - start[0]) * sdot;
    // Vertical arch: base interpolation plus apex bump 4 s (1 − s).
    let bump = 4.0 * s * (1.0 - s);
    let dbump = 4.0 * (1.0 - 2.0 * s) * sdot;
    let pz = start[1] + (end[1] - start[1]) * s + apex * bump;
    let vz = (end[1] - start[1]) * sdot + apex * dbump;
    ([px, pz], [vx, vz])
}

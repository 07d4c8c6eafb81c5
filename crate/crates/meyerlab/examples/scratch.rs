use meyerlab::geom::AxisBox;
use meyerlab::scalar::{parse_scalar, Mode, Scalar};
use meyerlab::scheme::{fibonacci_scheme, ProbeConfig};

const EXACT5: Mode = Mode::Exact { d: 5 };
fn s(v: &str) -> Scalar { parse_scalar(v, EXACT5).unwrap() }
fn gcd(a: i64, b: i64) -> i64 { if b == 0 { a } else { gcd(b, a % b) } }

fn main() {
    let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
    let internal = AxisBox::new(vec![s("-3")], vec![s("3")]);
    let phys = AxisBox::new(vec![s("-400")], vec![s("400")]);
    let pts = sch.lattice_points_in_box(&internal, &phys).unwrap();
    let data: Vec<(f64, f64)> = pts.iter().map(|p| (p.physical[0].to_f64(), p.internal[0].to_f64())).collect();
    let tau = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut best: Vec<(f64, String)> = Vec::new();
    for den in 2i64..=400 {
        for num in 1..den {
            if gcd(num, den) != 1 { continue; }
            let shift = num as f64 / den as f64;
            let lo = -1.0 + shift;
            let hi = tau - 1.0 + shift;
            let miss = |p: &(f64, f64)| (p.1 - lo).abs().min((p.1 - hi).abs());
            let a = |r: f64| data.iter().filter(|p| p.0.abs() <= r).map(|p| miss(p)).fold(f64::INFINITY, f64::min);
            let x = |m: f64| data.iter().filter(|p| miss(p) <= m).map(|p| p.0.abs()).fold(f64::INFINITY, f64::min);
            let (a10, a20, a40, a80) = (a(10.1), a(20.1), a(40.1), a(80.1));
            // c7 final value + staircase
            if a20 < 0.0135 { continue; }
            let (x1, x2, x3, x4) = (x(0.09), x(0.045), x(0.022), x(0.0115));
            if !(x1 < x2 && x2 < x3 && x3 < x4 && x4 > 20.1) { continue; }
            // c8 unblocked scales (offset floor at 1.8 eps)
            if !(x(2.0 * a10) >= 5.6 && x(2.0 * a20) >= 11.2 && x(2.0 * a40) >= 22.5 && x(2.0 * a80) >= 45.0) { continue; }
            // component densities
            if a40 < 0.003 || a80 < 0.0018 { continue; }
            let margin = a20.min(x1.min(5.0) * 0.01);
            best.push((margin, format!("shift {num}/{den}: A10={a10:.4} A20={a20:.4} A40={a40:.4} A80={a80:.4} X(.095)={x1:.2} X(.048)={x2:.2} X(.024)={x3:.2} X(.0124)={x4:.2}")));
        }
    }
    best.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for (_, line) in best.iter().take(12) { println!("{line}"); }
    println!("{} candidates", best.len());
}

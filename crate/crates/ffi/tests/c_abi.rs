use std::ffi::CStr;
use std::path::Path;
use std::ptr;

use mlion_ffi::*;

fn last_error() -> String {
    let p = mlion_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn candle(t: i64, c: f64) -> MlionCandle {
    MlionCandle { t, o: c, h: c + 1.0, l: c - 1.0, c, v: 10.0 }
}

#[test]
fn version_is_static_string() {
    let v = unsafe { CStr::from_ptr(mlion_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn fuse_endpoints_and_errors() {
    let llm = [candle(100, 10.0), candle(200, 12.0)];
    let ml = [candle(100, 20.0), candle(200, 22.0)];
    let mut out = [candle(0, 1.0); 2];
    unsafe {
        assert_eq!(mlion_fuse(llm.as_ptr(), ml.as_ptr(), 2, 1.0, out.as_mut_ptr()), MlionStatus::Ok);
        assert_eq!(out, llm);
        assert_eq!(mlion_fuse(llm.as_ptr(), ml.as_ptr(), 2, 0.25, out.as_mut_ptr()), MlionStatus::Ok);
        assert_eq!(out[0].c, 0.25 * 10.0 + 0.75 * 20.0);
        assert_eq!(mlion_fuse(llm.as_ptr(), ml.as_ptr(), 2, 1.5, out.as_mut_ptr()), MlionStatus::AlphaOutOfRange);
        assert!(last_error().contains("1.5"));
        let shifted = [candle(100, 1.0), candle(300, 1.0)];
        assert_eq!(mlion_fuse(llm.as_ptr(), shifted.as_ptr(), 2, 0.5, out.as_mut_ptr()), MlionStatus::HorizonMismatch);
        assert_eq!(mlion_fuse(ptr::null(), ml.as_ptr(), 2, 0.5, out.as_mut_ptr()), MlionStatus::NullPointer);
    }
}

#[test]
fn metrics() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(mlion_accuracy(110.0, 100.0, &mut x), MlionStatus::Ok);
        assert!((x - 0.9).abs() < 1e-12);
        assert_eq!(mlion_accuracy(1.0, 0.0, &mut x), MlionStatus::NonPositiveActual);
        assert_eq!(mlion_accuracy(1.0, 1.0, ptr::null_mut()), MlionStatus::NullPointer);
        let p = [101.0, 99.0, 100.0, 102.0];
        let a = [102.0, 101.0, 99.0, 103.0];
        assert_eq!(mlion_win_rate(p.as_ptr(), a.as_ptr(), 4, 100.0, &mut x), MlionStatus::Ok);
        assert_eq!(x, 0.75);
    }
}

#[test]
fn indicators_are_nan_padded() {
    let closes: Vec<f64> = (0..40).map(|i| 100.0 + (i as f64 * 0.7).sin() * 5.0).collect();
    let mut rsi = vec![0.0; 40];
    unsafe {
        assert_eq!(mlion_rsi(closes.as_ptr(), 40, 14, rsi.as_mut_ptr()), MlionStatus::Ok);
        assert!(rsi[..14].iter().all(|v| v.is_nan()));
        assert!(rsi[14..].iter().all(|v| (0.0..=100.0).contains(v)));
        assert_eq!(mlion_rsi(closes.as_ptr(), 10, 14, rsi.as_mut_ptr()), MlionStatus::InsufficientHistory);

        let (mut m, mut s, mut h) = (vec![0.0; 40], vec![0.0; 40], vec![0.0; 40]);
        assert_eq!(mlion_macd(closes.as_ptr(), 40, 12, 26, 9, m.as_mut_ptr(), s.as_mut_ptr(), h.as_mut_ptr()), MlionStatus::Ok);
        let last = 39;
        assert!((h[last] - (m[last] - s[last])).abs() < 1e-12);

        let (mut mid, mut up, mut lo) = (vec![0.0; 40], vec![0.0; 40], vec![0.0; 40]);
        assert_eq!(mlion_bollinger(closes.as_ptr(), 40, 20, 2.0, mid.as_mut_ptr(), up.as_mut_ptr(), lo.as_mut_ptr()), MlionStatus::Ok);
        assert!(mid[18].is_nan() && lo[19] <= mid[19] && mid[19] <= up[19]);
    }
}

#[test]
fn scoring() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(mlion_score_signal(1.0, 0.5, 0.0, 0.5, 0.3, 0.2, &mut x), MlionStatus::Ok);
        assert!((x - 0.65).abs() < 1e-12);
        assert_eq!(mlion_score_signal(1.2, 0.5, 0.0, 0.5, 0.3, 0.2, &mut x), MlionStatus::ComponentOutOfRange);
        assert_eq!(mlion_score_signal(1.0, 0.5, 0.0, 0.6, 0.3, 0.2, &mut x), MlionStatus::InvalidArgument);
        let theta = [0.0; 5];
        let phi = [0.2; 5];
        assert_eq!(mlion_score_candidate(theta.as_ptr(), phi.as_ptr(), 5, &mut x), MlionStatus::Ok);
        assert_eq!(x, 0.5);
    }
}

#[test]
fn fusion_handle_lifecycle() {
    let mut h: *mut MlionFusion = ptr::null_mut();
    let mut alpha = 0.0;
    unsafe {
        assert_eq!(mlion_fusion_new(0.5, 20, 0.55, 0.05, 1, &mut h), MlionStatus::Ok);
        assert!(!h.is_null());
        for _ in 0..10 {
            assert_eq!(mlion_fusion_update(h, 0.6, 0.8), MlionStatus::Ok);
        }
        assert_eq!(mlion_fusion_alpha(h, &mut alpha), MlionStatus::Ok);
        assert!((alpha - 0.6 / 1.4).abs() < 1e-12);
        assert_eq!(mlion_fusion_update(h, f64::NAN, 0.8), MlionStatus::InvalidArgument);
        mlion_fusion_free(h);
        mlion_fusion_free(ptr::null_mut());
        let mut bad: *mut MlionFusion = ptr::null_mut();
        assert_eq!(mlion_fusion_new(1.5, 20, 0.55, 0.05, 1, &mut bad), MlionStatus::InvalidArgument);
        assert!(bad.is_null());
    }
}

#[test]
fn policy_handle_learns() {
    let mut h: *mut MlionPolicy = ptr::null_mut();
    let phi = [0.9, 0.8, 0.7, 0.6, 0.5];
    let (mut p0, mut p1) = (0.0, 0.0);
    let mut theta = [0.0; 5];
    unsafe {
        assert_eq!(mlion_policy_new(0.05, &mut h), MlionStatus::Ok);
        assert_eq!(mlion_policy_score(h, phi.as_ptr(), 5, &mut p0), MlionStatus::Ok);
        for _ in 0..20 {
            assert_eq!(mlion_policy_update(h, phi.as_ptr(), 5, 1.0), MlionStatus::Ok);
        }
        assert_eq!(mlion_policy_score(h, phi.as_ptr(), 5, &mut p1), MlionStatus::Ok);
        assert!(p1 > p0);
        assert_eq!(mlion_policy_theta(h, theta.as_mut_ptr(), 5), MlionStatus::Ok);
        assert!(theta.iter().all(|t| *t > 0.0));
        assert_eq!(mlion_policy_theta(h, theta.as_mut_ptr(), 4), MlionStatus::DimensionMismatch);
        assert_eq!(mlion_policy_update(h, phi.as_ptr(), 4, 1.0), MlionStatus::DimensionMismatch);
        assert_eq!(mlion_policy_update(h, phi.as_ptr(), 5, 2.0), MlionStatus::InvalidArgument);
        mlion_policy_free(h);
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mlion.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["mlion_fuse", "mlion_accuracy", "mlion_win_rate", "mlion_rsi", "mlion_score_signal", "mlion_policy_update", "mlion_last_error"] {
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
    let Ok(status) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(&header).status() else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(status.success());
}

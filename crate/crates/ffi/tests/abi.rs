use std::ffi::{CStr, CString};
use std::ptr;

use randham_ffi::*;

fn last_error() -> String {
    let p = rh_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn sampler(r: f64, n: u32, kernel: RhKernel, seed: u64) -> *mut RhSampler {
    let mut s = ptr::null_mut();
    let st = unsafe { rh_sampler_new(r, n, 3, kernel as u32, seed, &mut s) };
    assert_eq!(st, RhStatus::Ok);
    s
}

#[test]
fn reference_dimension() {
    let mut d = 0;
    let st = unsafe { rh_gaussian_dimension(0.14, 25, 10, RhKernel::Periodic as u32, &mut d) };
    assert_eq!(st, RhStatus::Ok);
    assert_eq!(d, 52_500);
    assert!(rh_last_error().is_null());
}

#[test]
fn bad_arguments_set_status_and_message() {
    let mut d = 0;
    let st = unsafe { rh_gaussian_dimension(0.14, 25, 10, 7, &mut d) };
    assert_eq!(st, RhStatus::InvalidArgument);
    assert!(last_error().contains("kernel"));
    let st = unsafe { rh_gaussian_dimension(-1.0, 25, 10, 2, &mut d) };
    assert_eq!(st, RhStatus::InvalidArgument);
    let st = unsafe { rh_gaussian_dimension(0.1, 25, 10, 2, ptr::null_mut()) };
    assert_eq!(st, RhStatus::NullPointer);
    assert!(last_error().contains("out_dim"));
    let mut v = 0.0;
    let st = unsafe { rh_hamiltonian_value(ptr::null(), 0.0, 0.1, 0.2, &mut v) };
    assert_eq!(st, RhStatus::NullPointer);
}

#[test]
fn draws_are_reproducible_and_invertible() {
    let s = sampler(0.14, 4, RhKernel::Periodic, 5);
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(rh_sampler_draw(s, 3, &mut a), RhStatus::Ok);
        assert_eq!(rh_sampler_draw(s, 3, &mut b), RhStatus::Ok);
        let (mut va, mut vb) = (0.0, 0.0);
        rh_hamiltonian_value(a, 0.4, 0.2, 0.7, &mut va);
        rh_hamiltonian_value(b, 0.4, 0.2, 0.7, &mut vb);
        assert_eq!(va, vb);
        let mut img = [0.0; 2];
        let mut back = [0.0; 2];
        assert_eq!(rh_hamiltonian_flow_point(a, 0.3, 0.6, 200, 0, img.as_mut_ptr()), RhStatus::Ok);
        assert_eq!(rh_hamiltonian_flow_point(a, img[0], img[1], 200, 1, back.as_mut_ptr()), RhStatus::Ok);
        let d = (back[0] - 0.3).abs().min(1.0 - (back[0] - 0.3).abs()) + (back[1] - 0.6).abs();
        assert!(d < 1e-8, "{back:?}");
        let mut v = [0.0; 2];
        assert_eq!(rh_hamiltonian_vector_field(a, 0.1, 0.5, 0.5, v.as_mut_ptr()), RhStatus::Ok);
        assert!(v.iter().all(|c| c.is_finite()));
        rh_hamiltonian_free(a);
        rh_hamiltonian_free(b);
        rh_sampler_free(s);
    }
}

#[test]
fn curve_handles() {
    let s = sampler(0.14, 4, RhKernel::Periodic, 1);
    unsafe {
        let mut h = ptr::null_mut();
        rh_sampler_draw(s, 0, &mut h);
        let mut c = ptr::null_mut();
        assert_eq!(rh_advect_horizontal(h, 0.5, 100, 200, 0.01, 12, &mut c), RhStatus::Ok);
        let mut n = 0;
        rh_curve_len(c, &mut n);
        assert!(n >= 101);
        let mut buf = vec![0.0; 2 * n as usize];
        let mut written = 0;
        assert_eq!(rh_curve_vertices(c, buf.as_mut_ptr(), n, &mut written), RhStatus::Ok);
        assert_eq!(written, n);
        assert!((buf[buf.len() - 2] - buf[0] - 1.0).abs() < 1e-12);
        let label = CString::new("L5").unwrap();
        let mut count = 0;
        assert_eq!(rh_curve_count_crossings(c, label.as_ptr(), &mut count), RhStatus::Ok);
        assert!(count >= 3);
        let bad = CString::new("L0").unwrap();
        assert_eq!(rh_curve_count_crossings(c, bad.as_ptr(), &mut count), RhStatus::InvalidArgument);
        rh_curve_free(c);
        let mut none = ptr::null_mut();
        assert_eq!(rh_advect_horizontal(h, 0.5, 2, 200, 0.01, 12, &mut none), RhStatus::InvalidArgument);
        assert!(none.is_null());
        rh_hamiltonian_free(h);
        rh_sampler_free(s);
        rh_curve_free(ptr::null_mut());
    }
}

#[test]
fn zero_field_table_through_the_abi() {
    let cmd = CString::new("intersections").unwrap();
    let cfg = CString::new(
        "per_mode_scale = 0.0\nspatial_max = 3\ntemporal_max = 2\nsamples = 5\nregularity = [0.14]\nlagrangians = [\"L2\", \"L6\"]\n",
    )
    .unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { rh_run_table(cmd.as_ptr(), cfg.as_ptr(), &mut out) };
    assert_eq!(st, RhStatus::Ok);
    let csv = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { rh_string_free(out) };
    assert_eq!(csv, "label,regularity,estimate,stderr,samples\nL2,0.14,1,0,5\nL6,0.14,4,0,5\n");

    let bad = CString::new("bogus = 1").unwrap();
    let st = unsafe { rh_run_table(cmd.as_ptr(), bad.as_ptr(), &mut out) };
    assert_eq!(st, RhStatus::ParseError);
    let flow = CString::new("flow").unwrap();
    let st = unsafe { rh_run_table(flow.as_ptr(), cfg.as_ptr(), &mut out) };
    assert_eq!(st, RhStatus::Unsupported);
}

#[test]
fn every_kernel_code_builds_a_sampler() {
    for k in [RhKernel::SquaredExponential, RhKernel::Periodic, RhKernel::Autonomous] {
        let s = sampler(0.2, 2, k, 9);
        unsafe { rh_sampler_free(s) };
    }
}

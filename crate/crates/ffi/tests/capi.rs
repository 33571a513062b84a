use std::ffi::{CStr, CString};
use std::ptr;

use cellctx_ffi::*;

fn pattern(points: &[(f64, f64, u32)], side: f64, n_classes: usize) -> *mut CellctxPattern {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ls: Vec<u32> = points.iter().map(|p| p.2).collect();
    let mut out = ptr::null_mut();
    let st = unsafe {
        cellctx_pattern_new(
            xs.as_ptr(),
            ys.as_ptr(),
            ls.as_ptr(),
            points.len(),
            0.0,
            0.0,
            side,
            side,
            n_classes,
            &mut out,
        )
    };
    assert_eq!(st, CellctxStatus::Ok);
    out
}

fn last_error() -> String {
    let p = cellctx_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(cellctx_version()) };
    assert_eq!(v.to_str().unwrap(), cellctx::VERSION);
}

#[test]
fn kvector_field_single_neighbour() {
    let p = pattern(&[(100.0, 100.0, 0), (105.0, 100.0, 1)], 200.0, 2);
    let radii = [15.0, 30.0];
    let mut out = vec![f64::NAN; 2 * 2 * 2];
    let st = unsafe { cellctx_kvector_field(p, radii.as_ptr(), 2, 180.0, 100.0, 1, out.as_mut_ptr(), out.len()) };
    assert_eq!(st, CellctxStatus::Ok);
    assert_eq!(out, vec![0.0, 0.0, 0.01, 0.01, 0.01, 0.01, 0.0, 0.0]);

    let st = unsafe { cellctx_kvector_field(p, radii.as_ptr(), 2, 180.0, 100.0, 1, out.as_mut_ptr(), 3) };
    assert_eq!(st, CellctxStatus::BufferSize);
    unsafe { cellctx_pattern_free(p) };
}

#[test]
fn ripley_and_envelope() {
    let p = pattern(&[(10.0, 10.0, 0), (20.0, 10.0, 0)], 100.0, 1);
    let radii = [5.0, 15.0];
    let mut k = [0.0; 2];
    let st = unsafe { cellctx_ripley_k(p, 0, 0, radii.as_ptr(), 2, CellctxCorrection::None, k.as_mut_ptr()) };
    assert_eq!(st, CellctxStatus::Ok);
    assert_eq!(k, [0.0, 10000.0]);

    let (mut lo, mut hi) = ([0.0; 2], [0.0; 2]);
    let run = |lo: &mut [f64; 2], hi: &mut [f64; 2], sims| unsafe {
        cellctx_csr_envelope(
            p,
            0,
            0,
            radii.as_ptr(),
            2,
            sims,
            1,
            7,
            CellctxCorrection::None,
            lo.as_mut_ptr(),
            hi.as_mut_ptr(),
        )
    };
    assert_eq!(run(&mut lo, &mut hi, 19), CellctxStatus::Ok);
    assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h));
    let (mut lo2, mut hi2) = ([0.0; 2], [0.0; 2]);
    run(&mut lo2, &mut hi2, 19);
    assert_eq!((lo, hi), (lo2, hi2));
    assert_eq!(run(&mut lo, &mut hi, 1), CellctxStatus::InvalidArgument);
    assert!(last_error().contains("rank"));
    unsafe { cellctx_pattern_free(p) };
}

#[test]
fn masks_and_maps() {
    let p = pattern(&[(10.0, 10.0, 0), (30.0, 12.0, 1)], 40.0, 2);
    let mut det = ptr::null_mut();
    assert_eq!(unsafe { cellctx_detection_mask(p, 40, 40, 4, 1, &mut det) }, CellctxStatus::Ok);
    let (mut h, mut w, mut c, mut dt) = (0, 0, 0, CellctxDtype::F32);
    assert_eq!(unsafe { cellctx_raster_info(det, &mut h, &mut w, &mut c, &mut dt) }, CellctxStatus::Ok);
    assert_eq!((h, w, c, dt), (40, 40, 1, CellctxDtype::U8));
    let mut bytes = vec![0u8; 1600];
    assert_eq!(unsafe { cellctx_raster_copy_u8(det, bytes.as_mut_ptr(), 1600) }, CellctxStatus::Ok);
    assert_eq!(bytes.iter().filter(|&&b| b == 1).count(), 2 * 81);

    let mut classes = ptr::null_mut();
    assert_eq!(unsafe { cellctx_class_masks(p, det, &mut classes) }, CellctxStatus::Ok);
    let mut cb = vec![0u8; 3200];
    assert_eq!(unsafe { cellctx_raster_copy_u8(classes, cb.as_mut_ptr(), 3200) }, CellctxStatus::Ok);
    assert_eq!(cb[(10 * 40 + 10) * 2], 1);
    assert_eq!(cb[(12 * 40 + 30) * 2 + 1], 1);

    let radii = [15.0];
    let (mut map, mut valid) = (ptr::null_mut(), ptr::null_mut());
    let st = unsafe { cellctx_kvector_map(p, det, radii.as_ptr(), 1, 180.0, 100.0, 1, &mut map, &mut valid) };
    assert_eq!(st, CellctxStatus::Ok);
    let mut f = vec![0f32; 3200];
    assert_eq!(unsafe { cellctx_raster_copy_f32(map, f.as_mut_ptr(), 3200) }, CellctxStatus::Ok);
    assert!(f.iter().all(|&v| v == 0.0));
    assert_eq!(unsafe { cellctx_raster_copy_u8(map, bytes.as_mut_ptr(), 1600) }, CellctxStatus::InvalidArgument);

    let dir = tempfile::tempdir().unwrap();
    let file = CString::new(dir.path().join("det.csrm").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { cellctx_raster_save(det, file.as_ptr()) }, CellctxStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { cellctx_raster_load(file.as_ptr(), &mut back) }, CellctxStatus::Ok);
    let mut again = vec![0u8; 1600];
    unsafe { cellctx_raster_copy_u8(back, again.as_mut_ptr(), 1600) };
    assert_eq!(again, bytes);

    unsafe {
        for r in [det, classes, map, valid, back] {
            cellctx_raster_free(r);
        }
        cellctx_pattern_free(p);
    }
}

#[test]
fn extract_then_evaluate() {
    let (h, w) = (20, 20);
    let mut like = vec![0f32; h * w];
    let mut cls = vec![0f32; h * w * 2];
    for r in 4..7 {
        for c in 4..7 {
            like[r * w + c] = 0.9;
            cls[(r * w + c) * 2 + 1] = 1.0;
        }
    }
    let (mut l, mut c) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(cellctx_raster_from_f32(like.as_ptr(), h, w, 1, &mut l), CellctxStatus::Ok);
        assert_eq!(cellctx_raster_from_f32(cls.as_ptr(), h, w, 2, &mut c), CellctxStatus::Ok);
    }
    let mut preds = ptr::null_mut();
    assert_eq!(unsafe { cellctx_extract_cells(l, c, 0.5, 5, &mut preds) }, CellctxStatus::Ok);
    assert_eq!(unsafe { cellctx_predictions_len(preds) }, 1);
    let mut p = CellctxPrediction::default();
    assert_eq!(unsafe { cellctx_predictions_get(preds, 0, &mut p) }, CellctxStatus::Ok);
    assert_eq!((p.x, p.y, p.class_id, p.size), (5.0, 5.0, 1, 9));
    assert_eq!(unsafe { cellctx_predictions_get(preds, 1, &mut p) }, CellctxStatus::Domain);

    let gt = pattern(&[(5.0, 6.0, 1)], 20.0, 2);
    let mut det = CellctxScores::default();
    let mut per = [CellctxScores::default(); 2];
    let st = unsafe { cellctx_evaluate(&p.x, &p.y, &p.class_id, 1, gt, 6.0, &mut det, per.as_mut_ptr(), 2) };
    assert_eq!(st, CellctxStatus::Ok);
    assert_eq!((det.tp, det.fp, det.fn_count, det.f1), (1, 0, 0, 1.0));
    assert_eq!(per[1].f1, 1.0);
    assert_eq!((per[0].tp, per[0].f1), (0, 0.0));
    unsafe {
        cellctx_predictions_free(preds);
        cellctx_raster_free(l);
        cellctx_raster_free(c);
        cellctx_pattern_free(gt);
    }
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    let xs = [1.0];
    let ls = [3u32];
    let st = unsafe { cellctx_pattern_new(xs.as_ptr(), xs.as_ptr(), ls.as_ptr(), 1, 0.0, 0.0, 5.0, 5.0, 2, &mut out) };
    assert_ne!(st, CellctxStatus::Ok);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let st = unsafe { cellctx_pattern_new(ptr::null(), xs.as_ptr(), ls.as_ptr(), 1, 0.0, 0.0, 5.0, 5.0, 4, &mut out) };
    assert_eq!(st, CellctxStatus::NullPointer);
    assert!(last_error().contains("xs"));

    let mut k = [0.0];
    let st = unsafe { cellctx_ripley_k(ptr::null(), 0, 0, [1.0].as_ptr(), 1, CellctxCorrection::Border, k.as_mut_ptr()) };
    assert_eq!(st, CellctxStatus::NullPointer);

    let missing = CString::new("/nonexistent/x.csrm").unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { cellctx_raster_load(missing.as_ptr(), &mut r) }, CellctxStatus::Io);

    let p = pattern(&[(1.0, 1.0, 0), (1.2, 1.1, 0)], 5.0, 1);
    let mut det = ptr::null_mut();
    assert_eq!(unsafe { cellctx_detection_mask(p, 5, 5, 4, 1, &mut det) }, CellctxStatus::Inconsistent);
    unsafe { cellctx_pattern_free(p) };

    // Freeing NULL is a no-op; a successful call clears the message.
    unsafe {
        cellctx_pattern_free(ptr::null_mut());
        cellctx_raster_free(ptr::null_mut());
        cellctx_predictions_free(ptr::null_mut());
    }
    let p = pattern(&[(1.0, 1.0, 0)], 5.0, 1);
    assert!(cellctx_last_error().is_null());
    unsafe { cellctx_pattern_free(p) };
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cellctx.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for opaque in ["CellctxPattern", "CellctxRaster", "CellctxPredictions"] {
        assert!(header.contains(&format!("typedef struct {opaque} {opaque};")));
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/cellctx.h");
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(status.success());
}

//! C ABI over `cellctx`.
//!
//! Patterns, rasters and prediction lists are opaque handles that must be
//! released with their `_free` function. Every fallible call returns a
//! [`CellctxStatus`]; on failure `cellctx_last_error` holds a message for the
//! calling thread. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cellctx::eval::{evaluate, Scores};
use cellctx::groundtruth::{generate_class_masks, generate_detection_mask, generate_kvector_map};
use cellctx::infer::{extract_cells, Prediction};
use cellctx::raster::{DType, RasterData};
use cellctx::stats::{csr_envelope, k_vector_field, ripley_k, EdgeCorrection};
use cellctx::{Error, Point, PointPattern, RadiiGrid, RasterMap, Window};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellctxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Inconsistent = 4,
    Domain = 5,
    Io = 6,
    BufferSize = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellctxCorrection {
    None = 0,
    Border = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellctxDtype {
    U8 = 0,
    F32 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellctxScores {
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellctxPrediction {
    pub x: f64,
    pub y: f64,
    pub class_id: u32,
    pub size: usize,
}

pub struct CellctxPattern(PointPattern);

pub struct CellctxRaster(RasterMap);

pub struct CellctxPredictions(Vec<Prediction>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CellctxStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) | Error::Usage(_) => CellctxStatus::InvalidArgument,
            Error::Parse { .. } | Error::Version { .. } => CellctxStatus::Parse,
            Error::Io(_) => CellctxStatus::Io,
            Error::InconsistentInput(_) | Error::InconsistentModel(_) | Error::CoincidentPoints { .. } => {
                CellctxStatus::Inconsistent
            }
            Error::EmptyPattern(_)
            | Error::OutOfRange { .. }
            | Error::InsufficientPoints { .. }
            | Error::EmptyClass(_) => CellctxStatus::Domain,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CellctxStatus::NullPointer, format!("{what} is null"))
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CellctxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CellctxStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            CellctxStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn slice_mut<'a, T>(data: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

unsafe fn borrow<'a, T>(handle: *const T, what: &str) -> Result<&'a T, Failure> {
    handle.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn radii(data: *const f64, len: usize) -> Result<RadiiGrid, Failure> {
    Ok(RadiiGrid::new(slice(data, len, "radii")?.to_vec())?)
}

fn check_len(got: usize, needed: usize, what: &str) -> Result<(), Failure> {
    if got != needed {
        return Err(Failure(
            CellctxStatus::BufferSize,
            format!("{what} holds {got} values, expected {needed}"),
        ));
    }
    Ok(())
}

fn correction(c: CellctxCorrection) -> EdgeCorrection {
    match c {
        CellctxCorrection::None => EdgeCorrection::None,
        CellctxCorrection::Border => EdgeCorrection::Border,
    }
}

fn scores(s: &Scores) -> CellctxScores {
    CellctxScores {
        tp: s.tp,
        fp: s.fp,
        fn_count: s.fn_,
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cellctx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn cellctx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Build a labelled pattern from `n` coordinates and class ids.
///
/// # Safety
/// `xs`, `ys` and `labels` must each point to `n` readable values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellctx_pattern_new(
    xs: *const f64,
    ys: *const f64,
    labels: *const u32,
    n: usize,
    x0: f64,
    y0: f64,
    width: f64,
    height: f64,
    n_classes: usize,
    out: *mut *mut CellctxPattern,
) -> CellctxStatus {
    guard(|| {
        let xs = slice(xs, n, "xs")?;
        let ys = slice(ys, n, "ys")?;
        let labels = slice(labels, n, "labels")?;
        let points = xs.iter().zip(ys).map(|(&x, &y)| Point::new(x, y)).collect();
        let labels = labels.iter().map(|&l| l as usize).collect();
        let window = Window::new(x0, y0, width, height)?;
        emit(out, CellctxPattern(PointPattern::new(points, labels, window, n_classes)?))
    })
}

/// # Safety
/// `pattern` must be NULL or a handle from `cellctx_pattern_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cellctx_pattern_free(pattern: *mut CellctxPattern) {
    if !pattern.is_null() {
        drop(Box::from_raw(pattern));
    }
}

/// Number of points, or 0 for NULL.
///
/// # Safety
/// `pattern` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cellctx_pattern_len(pattern: *const CellctxPattern) -> usize {
    pattern.as_ref().map_or(0, |p| p.0.len())
}

/// Per-cell K-vectors, row-major: row `i` holds `n_classes * n_radii`
/// values ordered class-major. `out_len` must equal `len * n_classes * n_radii`.
///
/// # Safety
/// `radii` must hold `n_radii` values and `out` `out_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn cellctx_kvector_field(
    pattern: *const CellctxPattern,
    radii_ptr: *const f64,
    n_radii: usize,
    patch_size: f64,
    n_max: f64,
    workers: usize,
    out: *mut f64,
    out_len: usize,
) -> CellctxStatus {
    guard(|| {
        let p = &borrow(pattern, "pattern")?.0;
        let grid = radii(radii_ptr, n_radii)?;
        check_len(out_len, p.len() * p.n_classes() * n_radii, "out")?;
        let out = slice_mut(out, out_len, "out")?;
        let field = k_vector_field(p, &grid, patch_size, n_max, workers)?;
        for (chunk, kv) in out.chunks_exact_mut(p.n_classes() * n_radii).zip(&field) {
            chunk.copy_from_slice(&kv.values);
        }
        Ok(())
    })
}

/// Population K (or cross-K) at each radius, written to `out[n_radii]`.
///
/// # Safety
/// `radii` and `out` must each hold `n_radii` values.
#[no_mangle]
pub unsafe extern "C" fn cellctx_ripley_k(
    pattern: *const CellctxPattern,
    source_class: usize,
    target_class: usize,
    radii_ptr: *const f64,
    n_radii: usize,
    edge: CellctxCorrection,
    out: *mut f64,
) -> CellctxStatus {
    guard(|| {
        let p = &borrow(pattern, "pattern")?.0;
        let grid = radii(radii_ptr, n_radii)?;
        let out = slice_mut(out, n_radii, "out")?;
        let k = ripley_k(p, source_class, target_class, &grid, correction(edge))?;
        out.copy_from_slice(&k.values);
        Ok(())
    })
}

/// Rank envelope of K under complete spatial randomness. Runs on the global
/// thread pool; results do not depend on its size.
///
/// # Safety
/// `radii`, `lower` and `upper` must each hold `n_radii` values.
#[no_mangle]
pub unsafe extern "C" fn cellctx_csr_envelope(
    pattern: *const CellctxPattern,
    source_class: usize,
    target_class: usize,
    radii_ptr: *const f64,
    n_radii: usize,
    n_simulations: usize,
    rank: usize,
    seed: u64,
    edge: CellctxCorrection,
    lower: *mut f64,
    upper: *mut f64,
) -> CellctxStatus {
    guard(|| {
        let p = &borrow(pattern, "pattern")?.0;
        let grid = radii(radii_ptr, n_radii)?;
        let lower = slice_mut(lower, n_radii, "lower")?;
        let upper = slice_mut(upper, n_radii, "upper")?;
        let env = csr_envelope(
            p,
            source_class,
            target_class,
            &grid,
            n_simulations,
            rank,
            seed,
            correction(edge),
        )?;
        lower.copy_from_slice(&env.lower);
        upper.copy_from_slice(&env.upper);
        Ok(())
    })
}

/// Dilated single-channel u8 detection mask.
///
/// # Safety
/// `pattern` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cellctx_detection_mask(
    pattern: *const CellctxPattern,
    height: usize,
    width: usize,
    max_halfwidth: u32,
    min_gap: u32,
    out: *mut *mut CellctxRaster,
) -> CellctxStatus {
    guard(|| {
        let p = &borrow(pattern, "pattern")?.0;
        let det = generate_detection_mask(p, (height, width), max_halfwidth, min_gap)?;
        emit(out, CellctxRaster(det.mask))
    })
}

/// One u8 channel per class, from a detection mask.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cellctx_class_masks(
    pattern: *const CellctxPattern,
    detection: *const CellctxRaster,
    out: *mut *mut CellctxRaster,
) -> CellctxStatus {
    guard(|| {
        let p = &borrow(pattern, "pattern")?.0;
        let det = &borrow(detection, "detection")?.0;
        emit(out, CellctxRaster(generate_class_masks(p, det)?))
    })
}

/// Per-pixel K-vector map (f32) and its validity mask (u8).
///
/// # Safety
/// Handles must be live, `radii` must hold `n_radii` values, and both
/// outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellctx_kvector_map(
    pattern: *const CellctxPattern,
    detection: *const CellctxRaster,
    radii_ptr: *const f64,
    n_radii: usize,
    patch_size: f64,
    n_max: f64,
    workers: usize,
    out_map: *mut *mut CellctxRaster,
    out_valid: *mut *mut CellctxRaster,
) -> CellctxStatus {
    guard(|| {
        let p = &borrow(pattern, "pattern")?.0;
        let det = &borrow(detection, "detection")?.0;
        let grid = radii(radii_ptr, n_radii)?;
        if out_map.is_null() || out_valid.is_null() {
            return Err(null("out"));
        }
        let field = k_vector_field(p, &grid, patch_size, n_max, workers)?;
        let (map, valid) = generate_kvector_map(p, det, &field)?;
        emit(out_map, CellctxRaster(map))?;
        emit(out_valid, CellctxRaster(valid))
    })
}

/// Wrap a channel-last u8 buffer of `height * width * channels` bytes.
///
/// # Safety
/// `data` must hold that many bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellctx_raster_from_u8(
    data: *const u8,
    height: usize,
    width: usize,
    channels: usize,
    out: *mut *mut CellctxRaster,
) -> CellctxStatus {
    guard(|| {
        let len = height.saturating_mul(width).saturating_mul(channels);
        let data = slice(data, len, "data")?.to_vec();
        emit(out, CellctxRaster(RasterMap::new(height, width, channels, RasterData::U8(data))?))
    })
}

/// Wrap a channel-last f32 buffer of `height * width * channels` values.
///
/// # Safety
/// `data` must hold that many values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellctx_raster_from_f32(
    data: *const f32,
    height: usize,
    width: usize,
    channels: usize,
    out: *mut *mut CellctxRaster,
) -> CellctxStatus {
    guard(|| {
        let len = height.saturating_mul(width).saturating_mul(channels);
        let data = slice(data, len, "data")?.to_vec();
        emit(out, CellctxRaster(RasterMap::new(height, width, channels, RasterData::F32(data))?))
    })
}

/// Shape and element type of a raster.
///
/// # Safety
/// `raster` must be live; each output pointer must be writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn cellctx_raster_info(
    raster: *const CellctxRaster,
    height: *mut usize,
    width: *mut usize,
    channels: *mut usize,
    dtype: *mut CellctxDtype,
) -> CellctxStatus {
    guard(|| {
        let r = &borrow(raster, "raster")?.0;
        if let Some(h) = height.as_mut() {
            *h = r.height();
        }
        if let Some(w) = width.as_mut() {
            *w = r.width();
        }
        if let Some(c) = channels.as_mut() {
            *c = r.channels();
        }
        if let Some(d) = dtype.as_mut() {
            *d = match r.dtype() {
                DType::U8 => CellctxDtype::U8,
                DType::F32 => CellctxDtype::F32,
            };
        }
        Ok(())
    })
}

/// Copy a u8 raster's payload into `out[out_len]`.
///
/// # Safety
/// `out` must hold `out_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cellctx_raster_copy_u8(
    raster: *const CellctxRaster,
    out: *mut u8,
    out_len: usize,
) -> CellctxStatus {
    guard(|| {
        let r = &borrow(raster, "raster")?.0;
        let data = r
            .as_u8()
            .ok_or_else(|| Failure(CellctxStatus::InvalidArgument, "raster is not u8".into()))?;
        check_len(out_len, data.len(), "out")?;
        slice_mut(out, out_len, "out")?.copy_from_slice(data);
        Ok(())
    })
}

/// Copy an f32 raster's payload into `out[out_len]`.
///
/// # Safety
/// `out` must hold `out_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn cellctx_raster_copy_f32(
    raster: *const CellctxRaster,
    out: *mut f32,
    out_len: usize,
) -> CellctxStatus {
    guard(|| {
        let r = &borrow(raster, "raster")?.0;
        let data = r
            .as_f32()
            .ok_or_else(|| Failure(CellctxStatus::InvalidArgument, "raster is not f32".into()))?;
        check_len(out_len, data.len(), "out")?;
        slice_mut(out, out_len, "out")?.copy_from_slice(data);
        Ok(())
    })
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CellctxStatus::InvalidArgument, "path is not UTF-8".into()))
}

/// # Safety
/// `file` must be a NUL-terminated path; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellctx_raster_load(file: *const c_char, out: *mut *mut CellctxRaster) -> CellctxStatus {
    guard(|| emit(out, CellctxRaster(RasterMap::load(path(file)?)?)))
}

/// # Safety
/// `raster` must be live; `file` must be a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn cellctx_raster_save(raster: *const CellctxRaster, file: *const c_char) -> CellctxStatus {
    guard(|| Ok(borrow(raster, "raster")?.0.save(path(file)?)?))
}

/// # Safety
/// `raster` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cellctx_raster_free(raster: *mut CellctxRaster) {
    if !raster.is_null() {
        drop(Box::from_raw(raster));
    }
}

/// Threshold a likelihood map into predicted cells.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cellctx_extract_cells(
    likelihood: *const CellctxRaster,
    class_map: *const CellctxRaster,
    threshold: f64,
    min_size: usize,
    out: *mut *mut CellctxPredictions,
) -> CellctxStatus {
    guard(|| {
        let l = &borrow(likelihood, "likelihood")?.0;
        let c = &borrow(class_map, "class_map")?.0;
        emit(out, CellctxPredictions(extract_cells(l, c, threshold, min_size)?))
    })
}

/// # Safety
/// `preds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cellctx_predictions_len(preds: *const CellctxPredictions) -> usize {
    preds.as_ref().map_or(0, |p| p.0.len())
}

/// # Safety
/// `preds` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cellctx_predictions_get(
    preds: *const CellctxPredictions,
    index: usize,
    out: *mut CellctxPrediction,
) -> CellctxStatus {
    guard(|| {
        let list = &borrow(preds, "preds")?.0;
        let p = list.get(index).ok_or_else(|| {
            Failure(
                CellctxStatus::Domain,
                format!("index {index} out of range for {} predictions", list.len()),
            )
        })?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = CellctxPrediction {
            x: p.x,
            y: p.y,
            class_id: p.class as u32,
            size: p.size,
        };
        Ok(())
    })
}

/// # Safety
/// `preds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cellctx_predictions_free(preds: *mut CellctxPredictions) {
    if !preds.is_null() {
        drop(Box::from_raw(preds));
    }
}

/// Match `n_preds` predictions against a ground-truth pattern. `per_class`
/// must hold one entry per ground-truth class.
///
/// # Safety
/// `pred_xs`, `pred_ys` and `pred_classes` must hold `n_preds` values,
/// `detection` must be writable and `per_class` must hold `n_per_class`
/// writable entries.
#[no_mangle]
pub unsafe extern "C" fn cellctx_evaluate(
    pred_xs: *const f64,
    pred_ys: *const f64,
    pred_classes: *const u32,
    n_preds: usize,
    ground_truth: *const CellctxPattern,
    radius: f64,
    detection: *mut CellctxScores,
    per_class: *mut CellctxScores,
    n_per_class: usize,
) -> CellctxStatus {
    guard(|| {
        let gt = &borrow(ground_truth, "ground_truth")?.0;
        let xs = slice(pred_xs, n_preds, "pred_xs")?;
        let ys = slice(pred_ys, n_preds, "pred_ys")?;
        let cs = slice(pred_classes, n_preds, "pred_classes")?;
        check_len(n_per_class, gt.n_classes(), "per_class")?;
        let detection = detection.as_mut().ok_or_else(|| null("detection"))?;
        let per_class = slice_mut(per_class, n_per_class, "per_class")?;
        let preds: Vec<Prediction> = (0..n_preds)
            .map(|i| Prediction {
                x: xs[i],
                y: ys[i],
                class: cs[i] as usize,
                size: 0,
            })
            .collect();
        let report = evaluate(&preds, gt, radius)?;
        *detection = scores(&report.detection);
        for (dst, src) in per_class.iter_mut().zip(&report.per_class) {
            *dst = scores(src);
        }
        Ok(())
    })
}

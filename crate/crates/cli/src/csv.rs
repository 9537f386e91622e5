//! Diagnostics CSV serialization. Column order is fixed; floats carry
//! 17 significant digits so identical runs produce byte-identical files.

use kschem_core::DiagnosticsRecord;

pub const CSV_HEADER: &str =
    "step,t,mass_u,linf_u,linf_v,linf_w,psi,grad_v4,grad_w2,bound_violation,cfl_violation";

/// 17-significant-digit scientific notation (full f64 round trip).
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(rec: &DiagnosticsRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        rec.step,
        fmt_real(rec.t),
        fmt_real(rec.mass_u),
        fmt_real(rec.linf_u),
        fmt_real(rec.linf_v),
        fmt_real(rec.linf_w),
        fmt_real(rec.psi),
        fmt_real(rec.grad_v4),
        fmt_real(rec.grad_w2),
        rec.bound_violation,
        rec.cfl_violation,
    )
}

/// Full CSV document (header plus one row per record, trailing newline).
pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 256);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for rec in records {
        out.push_str(&csv_row(rec));
        out.push('\n');
    }
    out
}

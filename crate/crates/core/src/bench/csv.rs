use std::io::{self, Write};

use super::analysis::{BestQRow, OmegaRow};
use super::{KeyValues, ResultRow};

pub const CSV_HEADER: &str = "method,h,steps,cost_C,cost_V,error_L1,defect,wall_ms";

/// Scientific notation with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn write_metadata<W: Write>(w: &mut W, kv: &KeyValues, extra: &[String]) -> io::Result<()> {
    for (k, v) in kv {
        writeln!(w, "# {k}={v}")?;
    }
    for line in extra {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn row_fields(r: &ResultRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.method,
        format_real(r.h),
        r.steps,
        r.cost_c,
        r.cost_v,
        format_real(r.error_l1),
        format_real(r.defect),
        format_real(r.wall_ms)
    )
}

fn write_failures<W: Write>(w: &mut W, rows: impl Iterator<Item = (String, ResultRow)>) -> io::Result<()> {
    for (prefix, r) in rows {
        if let Some(msg) = &r.failure {
            writeln!(w, "# failed {prefix}method={} steps={}: {msg}", r.method, r.steps)?;
        }
    }
    Ok(())
}

/// Metadata comments, the header, one line per row, then one comment per
/// failed cell.
pub fn write_rows_csv<W: Write>(w: &mut W, kv: &KeyValues, extra: &[String], rows: &[ResultRow]) -> io::Result<()> {
    write_metadata(w, kv, extra)?;
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", row_fields(r))?;
    }
    write_failures(w, rows.iter().map(|r| (String::new(), r.clone())))
}

/// Like [`write_rows_csv`] with a leading `omega` column.
pub fn write_omega_csv<W: Write>(w: &mut W, kv: &KeyValues, extra: &[String], rows: &[OmegaRow]) -> io::Result<()> {
    write_metadata(w, kv, extra)?;
    writeln!(w, "omega,{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{}", format_real(r.omega), row_fields(&r.row))?;
    }
    write_failures(
        w,
        rows.iter().map(|r| (format!("omega={} ", format_real(r.omega)), r.row.clone())),
    )
}

/// One line per (p, ε, ω): the comparison budget, the two best q and each
/// q's error at the budget.
pub fn write_best_q_csv<W: Write>(
    w: &mut W,
    kv: &KeyValues,
    extra: &[String],
    q_set: &[u32],
    rows: &[BestQRow],
) -> io::Result<()> {
    write_metadata(w, kv, extra)?;
    let error_cols: Vec<String> = q_set.iter().map(|q| format!("error_q{q}")).collect();
    writeln!(w, "p,eps,omega,budget_C,first_q,second_q,{}", error_cols.join(","))?;
    for r in rows {
        let show = |q: Option<u32>| q.map_or_else(|| "none".to_string(), |q| q.to_string());
        let errors: Vec<String> = r.errors.iter().map(|&(_, e)| format_real(e)).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.p,
            format_real(r.eps),
            format_real(r.omega),
            format_real(r.budget),
            show(r.best.first().copied()),
            show(r.best.get(1).copied()),
            errors.join(",")
        )?;
    }
    Ok(())
}

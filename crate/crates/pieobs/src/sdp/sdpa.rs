//! SDPA sparse (.dat-s) export and import.
//!
//! Layout written:
//!
//! ```text
//! "comment
//! mDIM
//! nBLOCK
//! block structure      (negative entry = diagonal block of free scalars)
//! b_1 ... b_m          (equality right-hand sides)
//! k block i j value    (k = 0 objective, k >= 1 constraint k)
//! ```
//!
//! Matrix variables map to PSD blocks; the problem's free scalars are
//! carried in one trailing diagonal block (negative size), which importers
//! of this toolkit read back as free scalars. Entries are written in a fixed
//! sorted order with full round-trip precision, so export ∘ import ∘ export
//! is byte-identical.

use super::SdpProblem;
use crate::scalar::Scalar;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpaError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Serialize to the SDPA sparse format.
pub fn export_string(prob: &SdpProblem) -> String {
    let m = prob.constraints.len();
    let n_free = prob.free_vars.len();
    let mut out = String::new();
    out.push_str("\"pieobs SDPA sparse export\n");
    let _ = writeln!(out, "{m}");
    let n_block = prob.mat_vars.len() + usize::from(n_free > 0);
    let _ = writeln!(out, "{n_block}");
    let mut structure: Vec<String> = prob.mat_vars.iter().map(|v| v.size.to_string()).collect();
    if n_free > 0 {
        structure.push(format!("-{n_free}"));
    }
    let _ = writeln!(out, "{}", structure.join(" "));
    let rhs: Vec<String> = prob
        .constraints
        .iter()
        .map(|c| format_f64(-c.constant))
        .collect();
    let _ = writeln!(out, "{}", rhs.join(" "));

    // quintuples, constraint 0 = objective
    let mut quints: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    let mut emit = |cons: usize, expr: &Scalar, quints: &mut Vec<(usize, usize, usize, usize, f64)>| {
        for &(v, coef) in &expr.terms {
            let (block, i, j) = locate_entry(prob, v);
            quints.push((cons, block, i, j, coef));
        }
    };
    emit(0, &prob.objective, &mut quints);
    for (k, c) in prob.constraints.iter().enumerate() {
        emit(k + 1, c, &mut quints);
    }
    quints.sort_by(|a, b| {
        (a.0, a.1, a.2, a.3)
            .partial_cmp(&(b.0, b.1, b.2, b.3))
            .unwrap()
    });
    for (cons, block, i, j, v) in quints {
        // 1-based indices per the format
        let _ = writeln!(out, "{} {} {} {} {}", cons, block + 1, i + 1, j + 1, format_f64(v));
    }
    out
}

pub fn export(prob: &SdpProblem, path: &Path) -> Result<(), SdpaError> {
    std::fs::write(path, export_string(prob))?;
    Ok(())
}

fn locate_entry(prob: &SdpProblem, v: crate::scalar::VarId) -> (usize, usize, usize) {
    match prob.locate(v) {
        super::VarLoc::Mat(b, i, j) => (b, i, j),
        // free scalar: diagonal entry of the trailing block
        super::VarLoc::Free(f) => (prob.mat_vars.len(), f, f),
    }
}

/// Shortest representation that round-trips the f64 exactly.
fn format_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// Parse an SDPA sparse file back into an [`SdpProblem`].
///
/// Variables are renamed positionally (X0, X1, ..., f0, f1, ...); a negative
/// block is read back as free scalars.
pub fn import(path: &Path) -> Result<SdpProblem, SdpaError> {
    import_str(&std::fs::read_to_string(path)?)
}

pub fn import_str(text: &str) -> Result<SdpProblem, SdpaError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('"') && !l.trim_start().starts_with('*') && !l.trim().is_empty());
    let mut next = |what: &str| -> Result<(usize, &str), SdpaError> {
        lines.next().ok_or(SdpaError::Parse {
            line: 0,
            msg: format!("unexpected end of file, expected {what}"),
        })
    };
    let (ln, m_line) = next("mDIM")?;
    let m: usize = m_line.trim().parse().map_err(|_| SdpaError::Parse {
        line: ln + 1,
        msg: "bad mDIM".into(),
    })?;
    let (_, _nblock_line) = next("nBLOCK")?;
    let (ln, struct_line) = next("block structure")?;
    let sizes: Vec<i64> = struct_line
        .split(|c: char| c.is_whitespace() || c == ',' || c == '(' || c == ')' || c == '{' || c == '}')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse().map_err(|_| SdpaError::Parse {
                line: ln + 1,
                msg: format!("bad block size {t}"),
            })
        })
        .collect::<Result<_, _>>()?;
    let (ln, rhs_line) = next("right-hand side")?;
    let rhs: Vec<f64> = rhs_line
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse().map_err(|_| SdpaError::Parse {
                line: ln + 1,
                msg: format!("bad rhs value {t}"),
            })
        })
        .collect::<Result<_, _>>()?;
    if rhs.len() != m {
        return Err(SdpaError::Parse {
            line: ln + 1,
            msg: format!("expected {m} rhs values, got {}", rhs.len()),
        });
    }

    let mut prob = SdpProblem::new();
    let mut mat_refs = Vec::new();
    let mut free_base: Vec<crate::scalar::VarId> = Vec::new();
    for (b, &sz) in sizes.iter().enumerate() {
        if sz > 0 {
            mat_refs.push(Some(prob.add_mat_var(&format!("X{b}"), sz as usize)));
        } else {
            mat_refs.push(None);
            for f in 0..(-sz) as usize {
                free_base.push(prob.add_free_var(&format!("f{f}")));
            }
        }
    }
    let mut objective = Scalar::zero();
    let mut cons: Vec<Scalar> = (0..m)
        .map(|k| Scalar::num(-rhs[k]))
        .collect();
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(SdpaError::Parse {
                line: ln + 1,
                msg: format!("expected 5 fields, got {}", toks.len()),
            });
        }
        let k: usize = toks[0].parse().map_err(|_| SdpaError::Parse {
            line: ln + 1,
            msg: "bad constraint index".into(),
        })?;
        let b: usize = toks[1].parse::<usize>().map_err(|_| SdpaError::Parse {
            line: ln + 1,
            msg: "bad block index".into(),
        })? - 1;
        let i: usize = toks[2].parse::<usize>().map_err(|_| SdpaError::Parse {
            line: ln + 1,
            msg: "bad row".into(),
        })? - 1;
        let j: usize = toks[3].parse::<usize>().map_err(|_| SdpaError::Parse {
            line: ln + 1,
            msg: "bad col".into(),
        })? - 1;
        let v: f64 = toks[4].parse().map_err(|_| SdpaError::Parse {
            line: ln + 1,
            msg: "bad value".into(),
        })?;
        let var = match mat_refs[b] {
            Some(mr) => prob.mat_entry(mr, i, j),
            None => {
                if i != j {
                    return Err(SdpaError::Parse {
                        line: ln + 1,
                        msg: "off-diagonal entry in a diagonal block".into(),
                    });
                }
                free_base[i]
            }
        };
        let term = Scalar {
            constant: 0.0,
            terms: vec![(var, v)],
        };
        if k == 0 {
            objective = objective.add(&term);
        } else {
            cons[k - 1] = cons[k - 1].add(&term);
        }
    }
    for c in cons {
        prob.add_equality(c);
    }
    prob.set_objective(objective);
    Ok(prob)
}

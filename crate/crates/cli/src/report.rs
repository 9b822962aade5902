//! `verify` and `analyze`.

use recursive_vc::audit::{composed_security_audit, SecurityEntry};
use recursive_vc::schemes::{analyze_family, build_function_family, build_k_of_k, build_k_of_n};
use recursive_vc::{
    contrast_audit, security_audit, Error, Rational, Result, SchemeBasis, SchemeSpec, SecurityMode,
};
use serde_json::{json, Value};

use crate::{short_number, summary_line, Outcome};

fn mode_name(mode: SecurityMode) -> &'static str {
    match mode {
        SecurityMode::FullEnumeration => "full-enumeration",
        SecurityMode::ColumnMultiset => "column-multiset",
    }
}

fn security_json(e: &SecurityEntry) -> Value {
    json!({
        "q": e.q,
        "mode": mode_name(e.mode),
        "subsets_checked": e.subsets_checked,
        "items_per_collection": e.items_per_collection.to_string(),
        "mismatched": e.mismatched,
        "pass": e.pass,
    })
}

fn corrupted(basis: &SchemeBasis, (row, col): (usize, usize)) -> Result<SchemeBasis> {
    if row >= basis.n() || col >= basis.m() {
        return Err(Error::InvalidArgument(format!(
            "cell {row}:{col} outside the {}x{} white canonical",
            basis.n(),
            basis.m()
        )));
    }
    let mut white = basis.white().clone();
    white.flip(row, col);
    SchemeBasis::with_claimed_contrast(
        format!("{} (bit {row}:{col} flipped)", basis.label()),
        basis.k(),
        white,
        basis.black().clone(),
        basis.d(),
        basis.alpha(),
    )
}

pub fn verify(
    spec: &SchemeSpec,
    q: Option<usize>,
    full_enum: bool,
    json_out: bool,
    corrupt: Option<(usize, usize)>,
) -> Result<Outcome> {
    let basis = match spec.build() {
        Ok(b) => b,
        Err(Error::DegenerateFamily(why)) => {
            if json_out {
                println!(
                    "{}",
                    json!({ "scheme": spec.to_string(), "pass": false, "reason": why })
                );
            } else {
                println!("scheme {spec}: FAIL, {why}");
            }
            return Ok(Outcome::VerificationFailed);
        }
        Err(e) => return Err(e),
    };
    let basis = match corrupt {
        Some(cell) => corrupted(&basis, cell)?,
        None => basis,
    };
    let k = basis.k();
    let qs: Vec<usize> = match q {
        Some(q) if q == 0 || q >= k => {
            return Err(Error::InvalidArgument(format!(
                "security is checked for 1 <= q < k = {k}, got {q}"
            )))
        }
        Some(q) => vec![q],
        None => (1..k).collect(),
    };
    let mode = if full_enum {
        SecurityMode::FullEnumeration
    } else {
        SecurityMode::ColumnMultiset
    };

    let contrast = contrast_audit(&basis)?;
    let security = qs
        .iter()
        .map(|&q| security_audit(&basis, q, mode))
        .collect::<Result<Vec<_>>>()?;
    let composed = match *spec {
        SchemeSpec::KOfN { k, n, family } if corrupt.is_none() => {
            let base = build_k_of_k(k)?;
            let h = build_function_family(n, k, family)?;
            qs.iter()
                .map(|&q| composed_security_audit(&base, &h, q))
                .collect::<Result<Vec<_>>>()?
        }
        _ => Vec::new(),
    };
    let pass = contrast.pass && security.iter().all(|e| e.pass) && composed.iter().all(|c| c.pass);

    if json_out {
        let out = json!({
            "scheme": spec.to_string(),
            "label": basis.label(),
            "n": basis.n(),
            "k": k,
            "m": basis.m(),
            "r": basis.collection_size().to_string(),
            "contrast": {
                "d": contrast.d,
                "alpha": contrast.alpha.to_string(),
                "stored_d": contrast.stored_d,
                "stored_alpha": contrast.stored_alpha.to_string(),
                "per_q": contrast.per_q.iter().map(|w| json!({
                    "q": w.q,
                    "white": [w.white.min, w.white.max],
                    "black": [w.black.min, w.black.max],
                })).collect::<Vec<_>>(),
                "pass": contrast.pass,
            },
            "security": security.iter().map(security_json).collect::<Vec<_>>(),
            "composed_security": composed.iter().map(|c| json!({
                "q": c.q,
                "l": c.l,
                "pass": c.pass,
                "subsets": c.per_subset.iter().map(|s| json!({
                    "subset": s.subset,
                    "white": s.white,
                    "black": s.black,
                    "predicted": s.predicted.to_string(),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "pass": pass,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&out).map_err(|e| Error::Format(e.to_string()))?
        );
    } else {
        println!("{}", summary_line(spec, &basis));
        if corrupt.is_some() {
            println!("auditing {}", basis.label());
        }
        println!("OR weights of q stacked rows (white min..max, black min..max):");
        for w in &contrast.per_q {
            println!(
                "  q={:<2} white {}..{}  black {}..{}",
                w.q, w.white.min, w.white.max, w.black.min, w.black.max
            );
        }
        println!(
            "contrast: d={} alpha={} (claimed d={} alpha={}) {}",
            contrast.d,
            contrast.alpha,
            contrast.stored_d,
            contrast.stored_alpha,
            verdict(contrast.pass)
        );
        for e in &security {
            println!(
                "security q={} {}: {} subsets, {} items per color, {}",
                e.q,
                mode_name(e.mode),
                e.subsets_checked,
                short_number(&e.items_per_collection.to_string()),
                verdict(e.pass)
            );
            for bad in e.mismatched.iter().take(5) {
                println!("  rows {bad:?} distinguish white from black");
            }
        }
        for c in &composed {
            println!(
                "composed security q={} over {} functions: {} subsets, {}",
                c.q,
                c.l,
                c.per_subset.len(),
                verdict(c.pass)
            );
        }
        println!("r={}", short_number(&basis.collection_size().to_string()));
        println!("result: {}", verdict(pass));
    }
    Ok(if pass {
        Outcome::Success
    } else {
        Outcome::VerificationFailed
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn analyze(spec: &SchemeSpec, json_out: bool) -> Result<Outcome> {
    let SchemeSpec::KOfN { k, n, family } = *spec else {
        return Err(Error::InvalidArgument(format!(
            "analyze needs a kofn:k,n scheme, got {spec}"
        )));
    };
    let base = build_k_of_k(k)?;
    let h = build_function_family(n, k, family)?;
    let analysis = analyze_family(&h, k)?;
    let bound = analysis.min_full_beta * base.alpha();
    let (composed, degenerate) = match build_k_of_n(&base, n, &h) {
        Ok(b) => (Some(b), None),
        Err(Error::DegenerateFamily(why)) => (None, Some(why)),
        Err(e) => return Err(e),
    };
    let measured = composed.as_ref().map(SchemeBasis::alpha);
    let ok = measured.is_some_and(|a| a >= bound && a > Rational::from_integer(0));

    if json_out {
        let out = json!({
            "scheme": spec.to_string(),
            "family": family.to_string(),
            "l": h.l(),
            "base_alpha": base.alpha().to_string(),
            "subsets": analysis.per_subset.iter().map(|s| json!({
                "subset": s.subset,
                "beta": s.beta.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "min_beta_k": analysis.min_full_beta.to_string(),
            "guaranteed_alpha": bound.to_string(),
            "measured_alpha": measured.map(|a| a.to_string()),
            "m": composed.as_ref().map(SchemeBasis::m),
            "degenerate": degenerate,
            "pass": ok,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&out).map_err(|e| Error::Format(e.to_string()))?
        );
    } else {
        println!(
            "family {family}: {} functions from {n} participants to {k} rows",
            h.l()
        );
        let header: Vec<String> = (1..=k).map(|q| format!("beta_{q}")).collect();
        println!(
            "  {:<16} {}",
            "subset",
            header.iter().map(|s| format!("{s:>8}")).collect::<String>()
        );
        for s in &analysis.per_subset {
            let subset = format!("{:?}", s.subset.iter().map(|i| i + 1).collect::<Vec<_>>());
            let betas: String = s
                .beta
                .iter()
                .map(|b| format!("{:>8}", b.to_string()))
                .collect();
            println!("  {subset:<16} {betas}");
        }
        println!("min beta_{k} = {}", analysis.min_full_beta);
        println!(
            "guaranteed alpha' >= beta_{k} * alpha = {} * {} = {bound}",
            analysis.min_full_beta,
            base.alpha()
        );
        match (&composed, &degenerate) {
            (Some(b), _) => println!("measured alpha' = {} (m' = {})", b.alpha(), b.m()),
            (None, why) => println!("measured alpha': none, {}", why.as_deref().unwrap_or("")),
        }
    }
    Ok(if ok {
        Outcome::Success
    } else {
        Outcome::VerificationFailed
    })
}

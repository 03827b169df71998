//! Set literals: comma-separated integers and `lo..hi` ranges, e.g. `0,2..5,9`.

pub fn parse_ints(s: &str) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: i64 = lo
                .trim()
                .parse()
                .map_err(|_| format!("bad range start in `{part}`"))?;
            let hi: i64 = hi
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| format!("bad range end in `{part}`"))?;
            if hi < lo {
                return Err(format!("empty range `{part}`"));
            }
            if hi - lo > 1_000_000 {
                return Err(format!("range `{part}` is too long"));
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().map_err(|_| format!("bad integer `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("empty set literal".into());
    }
    Ok(out)
}

pub fn parse_positive(s: &str) -> Result<Vec<u32>, String> {
    parse_ints(s)?
        .into_iter()
        .map(|x| u32::try_from(x).map_err(|_| format!("`{x}` is not a valid h")))
        .collect()
}

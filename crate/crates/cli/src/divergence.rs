use toolcraft::planscript::{ExecutionTrace, TraceEntry};

/// First point at which two traces disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// Index into the entry lists.
    pub entry: usize,
    pub source: String,
    pub reason: String,
}

fn describe(e: &TraceEntry) -> String {
    match &e.error {
        Some(err) => format!("error `{err}`"),
        None => format!("snapshot {}", e.snapshot),
    }
}

pub fn first_divergence(stored: &ExecutionTrace, fresh: &ExecutionTrace) -> Option<Divergence> {
    for (i, (a, b)) in stored.entries.iter().zip(&fresh.entries).enumerate() {
        let reason = if a.source != b.source {
            Some(format!("source differs: stored `{}`, now `{}`", a.source, b.source))
        } else if a.calls != b.calls {
            let skill = a.calls.iter().zip(&b.calls).find(|(x, y)| x != y).map(|(x, _)| x.skill.clone());
            Some(format!("calls differ{}", skill.map(|s| format!(" at `{s}`")).unwrap_or_default()))
        } else if a.error != b.error || a.snapshot != b.snapshot || a.value != b.value {
            Some(format!("stored {}, now {}", describe(a), describe(b)))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Some(Divergence { entry: i, source: a.source.clone(), reason });
        }
    }
    let (n, m) = (stored.entries.len(), fresh.entries.len());
    (n != m).then(|| {
        let i = n.min(m);
        let longer = if n > m { &stored.entries[i] } else { &fresh.entries[i] };
        Divergence {
            entry: i,
            source: longer.source.clone(),
            reason: format!("stored trace has {n} entries, replay has {m}"),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(statement: usize, snapshot: &str) -> TraceEntry {
        TraceEntry { statement, source: format!("s{statement}"), calls: vec![], value: None, error: None, snapshot: snapshot.into() }
    }

    #[test]
    fn identical_traces() {
        let t = ExecutionTrace { entries: vec![entry(0, "a"), entry(1, "b")] };
        assert_eq!(first_divergence(&t, &t.clone()), None);
    }

    #[test]
    fn snapshot_mismatch_and_length() {
        let a = ExecutionTrace { entries: vec![entry(0, "a"), entry(1, "b")] };
        let b = ExecutionTrace { entries: vec![entry(0, "a"), entry(1, "c")] };
        let d = first_divergence(&a, &b).unwrap();
        assert_eq!(d.entry, 1);
        assert!(d.reason.contains("snapshot b") && d.reason.contains("snapshot c"));
        let short = ExecutionTrace { entries: vec![entry(0, "a")] };
        assert_eq!(first_divergence(&a, &short).unwrap().entry, 1);
    }
}

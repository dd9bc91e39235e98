use rectnet::complexity::{counts_residual, counts_skip, residual_recurrence};
use rectnet::transform::{collapse_structure, predicted_counts};
use rectnet::{collapse, counts_plain, random_net, MaxNet, NetKind, ReduceOptions};

fn width_vectors(max_depth: usize, max_width: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut layer = vec![Vec::new()];
    for _ in 0..max_depth {
        layer = layer
            .into_iter()
            .flat_map(|w: Vec<usize>| (1..=max_width).map(move |l| [w.clone(), vec![l]].concat()))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

// Sizes by iterating the per-step width rule by hand.
fn walk(widths: &[usize], appended: impl Fn(usize, usize) -> usize) -> (usize, usize) {
    let mut w = widths.to_vec();
    let mut n = 0;
    while w.len() > 1 {
        let m = w.len();
        let top = w.pop().unwrap();
        n += top;
        w[m - 2] += appended(m, top);
    }
    (w[0], n)
}

#[test]
fn structural_sizes_exhaustive() {
    for widths in width_vectors(5, 3) {
        for kind in NetKind::ALL {
            let net = random_net::<f64>(kind, 2, &widths, 0, 1.0).unwrap();
            let realized = collapse_structure(&net.stack).unwrap();
            let want = match kind {
                NetKind::Plain => walk(&widths, |_, l| l),
                NetKind::FullSkip => walk(&widths, |_, l| 2 * l),
                NetKind::Residual => walk(&widths, |m, l| if m % 2 == 0 { l } else { 2 * l }),
            };
            assert_eq!(realized, want, "{kind} {widths:?}");
            assert_eq!(predicted_counts(kind, &widths), want, "{kind} {widths:?}");
        }
    }
}

#[test]
fn materialized_heads_match_counts() {
    for widths in width_vectors(4, 2) {
        for kind in NetKind::ALL {
            let (l, n) = predicted_counts(kind, &widths);
            if n > 12 {
                continue;
            }
            let net: MaxNet = random_net::<f64>(kind, 1, &widths, 1, 1.0).unwrap().into();
            let (out, rep) = collapse(&net, &ReduceOptions::default()).unwrap();
            assert_eq!((out.stack.widths.clone(), out.heads.len()), (vec![l], 1 << n), "{kind} {widths:?}");
            assert_eq!((rep.final_width, rep.head_exponent), (l, n));
            assert!(rep.counts.as_ref().unwrap().matches);
        }
    }
}

#[test]
fn closed_form_examples() {
    assert_eq!(counts_plain(&[2, 2, 2]), (6, 6));
    assert_eq!(counts_plain(&[3]), (3, 0));
    assert_eq!(counts_plain(&[1, 2, 3]), (6, 8));
    assert_eq!(counts_skip(&[1, 1, 1]), (7, 4));
    assert_eq!(counts_skip(&[2, 1]), (4, 1));
    assert_eq!(counts_skip(&[1, 1, 1, 1]), (15, 11));
    let r = counts_residual(&[1, 1, 1, 1]);
    assert_eq!((r.recurrence.width, r.recurrence.exponent), (6, 8));
    assert!(!r.width_mismatch() && !r.exponent_mismatch());
    let r = counts_residual(&[1, 1, 1]);
    assert_eq!((r.recurrence.width, r.recurrence.exponent), (4, 4));
    assert!(r.width_mismatch() && !r.exponent_mismatch());
    assert_eq!(residual_recurrence(&[1, 1]), counts_plain(&[1, 1]));
}

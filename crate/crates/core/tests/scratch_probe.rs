// temporary probe, removed before finishing
use polarmap::polar::ScRule;
use polarmap::search::{brute_force_select, table_gain, SearchBudget};

#[test]
#[ignore]
fn probe_table1() {
    for (k, v) in [(3usize, 1usize), (3, 2), (4, 1), (4, 2)] {
        let budget = SearchBudget::new(200, 200_000, 424243).unwrap();
        let t0 = std::time::Instant::now();
        let (best, table) = brute_force_select(16, k, v, 0.2, &budget, ScRule::MinSum).unwrap();
        let mut rows: Vec<_> = table
            .iter()
            .map(|r| (r.estimate.ber, r.selection.as_slice().to_vec()))
            .collect();
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        println!(
            "K={k} V={v}: best {:?} (1-based {:?}) gain {:.3} elapsed {:?}",
            best.as_slice(),
            best.as_slice().iter().map(|x| x + 1).collect::<Vec<_>>(),
            table_gain(&table),
            t0.elapsed()
        );
        for (ber, sel) in rows.iter().take(5) {
            let one_based: Vec<usize> = sel.iter().map(|x| x + 1).collect();
            println!("   {one_based:?} -> {ber:.5}");
        }
    }
}

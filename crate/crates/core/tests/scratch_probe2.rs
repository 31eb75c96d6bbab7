// temporary probe, removed before finishing
use polarmap::mapping::{selection_to_permutation, Permutation, Selection};
use polarmap::polar::{polar_transform, PolarCode, ScDecoder, ScRule, LLR_CLAMP};
use polarmap::rng::substream;
use rand::Rng;

struct Sim {
    code: PolarCode,
    n: usize,
}

#[derive(Clone, Copy)]
enum LlrMode {
    PerPosition,
    Uniform,
}

impl Sim {
    fn run(
        &self,
        perm: &Permutation,
        v: usize,
        p: f64,
        frames: u64,
        seed: u64,
        rule: ScRule,
        mode: LlrMode,
    ) -> (f64, f64) {
        let n = self.n;
        let k = self.code.info_len();
        let mut dec = ScDecoder::new(&self.code, rule);
        let mag_noisy = ((1.0 - p) / p).ln();
        let mut bit_err = 0u64;
        let mut frame_err = 0u64;
        for f in 0..frames {
            let mut rng = substream(seed, f);
            let data: Vec<u8> = (0..k).map(|_| u8::from(rng.random::<bool>())).collect();
            let mut cw = vec![0u8; n];
            for (&pos, &b) in self.code.info_set().iter().zip(&data) {
                cw[pos] = b;
            }
            polar_transform(&mut cw);
            let mapped: Vec<u8> = (0..n).map(|i| cw[perm.at(i)]).collect();
            let mut llr = vec![0.0; n];
            for i in 0..n {
                let flip = if i < v { false } else { rng.random::<f64>() < p };
                let r = mapped[i] ^ u8::from(flip);
                let mag = match mode {
                    LlrMode::PerPosition => {
                        if i < v {
                            LLR_CLAMP
                        } else {
                            mag_noisy
                        }
                    }
                    LlrMode::Uniform => mag_noisy,
                };
                llr[i] = (1.0 - 2.0 * f64::from(r)) * mag;
            }
            let mut demapped = vec![0.0; n];
            for i in 0..n {
                demapped[perm.at(i)] = llr[i];
            }
            let dhat = dec.decode(&demapped).unwrap();
            let errs = dhat
                .iter()
                .zip(&data)
                .filter(|(a, b)| a != b)
                .count() as u64;
            bit_err += errs;
            frame_err += u64::from(errs > 0);
        }
        (
            bit_err as f64 / (frames * k as u64) as f64,
            frame_err as f64 / frames as f64,
        )
    }
}

#[test]
#[ignore]
fn probe_hypotheses() {
    let frames = 150_000u64;
    for (k, v, label) in [(3usize, 1usize, "K=3 V=1"), (3, 2, "K=3 V=2"), (4, 1, "K=4 V=1"), (4, 2, "K=4 V=2")] {
        let sim = Sim {
            code: PolarCode::new(16, k).unwrap(),
            n: 16,
        };
        for (mode, mname) in [(LlrMode::PerPosition, "perpos"), (LlrMode::Uniform, "uniform")] {
            for (rule, rname) in [(ScRule::Exact, "exact"), (ScRule::MinSum, "minsum")] {
                let mut rows: Vec<(f64, f64, Vec<usize>)> = Vec::new();
                let combos: Vec<Vec<usize>> = if v == 1 {
                    (0..16).map(|i| vec![i]).collect()
                } else {
                    let mut c = Vec::new();
                    for a in 0..16 {
                        for b in a + 1..16 {
                            c.push(vec![a, b]);
                        }
                    }
                    c
                };
                for combo in combos {
                    let sel = Selection::new(combo.clone()).unwrap();
                    let perm = selection_to_permutation(&sel, 16).unwrap();
                    let (ber, fer) = sim.run(&perm, v, 0.2, frames, 97531, rule, mode);
                    rows.push((ber, fer, combo));
                }
                rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let best = &rows[0];
                let worst = rows.last().unwrap();
                let ob: Vec<usize> = best.2.iter().map(|x| x + 1).collect();
                println!(
                    "{label} {mname} {rname}: best {ob:?} ber {:.4} fer {:.4} gain_ber {:.2}",
                    best.0,
                    best.1,
                    worst.0 / best.0
                );
                for r in rows.iter().take(3) {
                    let o: Vec<usize> = r.2.iter().map(|x| x + 1).collect();
                    println!("     {o:?} ber {:.4} fer {:.4}", r.0, r.1);
                }
            }
        }
    }
}

use rcs_core::control::{CommandPacket, DEFAULT_COMMAND_BITS};
use rcs_core::network::{ChannelConfig, DelayModel, LinkQueue};
use rcs_core::policies::QueueDiscipline;
use rcs_core::stream_rng;
use rcs_core::world::Vec3;

/// Lists the examples once: as a table for the acceptance report and as
/// individual tests.
macro_rules! examples {
    ($($name:ident),* $(,)?) => {
        #[cfg_attr(test, allow(dead_code))]
        pub const ALL: &[(&str, fn())] = &[$((stringify!($name), $name)),*];

        #[cfg(test)]
        mod tests {
            $(#[test]
            fn $name() {
                super::$name()
            })*
        }
    };
}

/// Exact mean of the geometric law truncated to `1..=cap`, by summing the
/// probability mass function term by term.
fn truncated_geometric_mean(p: f64, cap: u64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for k in 1..=cap {
        let w = p * (1.0 - p).powi(k as i32 - 1);
        num += k as f64 * w;
        den += w;
    }
    num / den
}

pub fn loss_fraction_matches_probability() {
    for (i, &loss_prob) in [0.1, 0.2, 0.5].iter().enumerate() {
        let ch = ChannelConfig {
            loss_prob,
            ..ChannelConfig::perfect()
        };
        let mut q: LinkQueue<CommandPacket> = LinkQueue::new(QueueDiscipline::Fifo, None);
        let mut rng = stream_rng(7 + i as u64, 2);
        let trials = 100_000u64;
        for t in 1..=trials / 100 {
            for j in 0..100 {
                q.enqueue(CommandPacket {
                    id: t * 100 + j,
                    generated_slot: t,
                    velocity_command: Vec3::ZERO,
                    voi: 0.0,
                    size_bits: DEFAULT_COMMAND_BITS,
                });
            }
            q.transmit(&ch, t, &mut rng);
        }
        let c = q.counters();
        assert_eq!(c.sent, trials);
        let frac = c.lost as f64 / trials as f64;
        assert!((frac - loss_prob).abs() <= 0.01, "loss {loss_prob}: observed {frac}");
    }
}

pub fn geometric_delay_mean_matches_pmf() {
    for (i, &(p, cap)) in [(0.2, 20), (0.4, 20), (0.6, 20), (0.8, 20), (0.1, 5), (0.05, 50)]
        .iter()
        .enumerate()
    {
        let m = DelayModel::Geometric { p, cap };
        let mut rng = stream_rng(11 + i as u64, 2);
        let n = 200_000;
        let mean = (0..n).map(|_| m.sample(&mut rng) as f64).sum::<f64>() / n as f64;
        let oracle = truncated_geometric_mean(p, cap);
        assert!((mean / oracle - 1.0).abs() < 0.05, "p {p} cap {cap}: {mean} vs {oracle}");
    }
}

pub fn geometric_delay_histogram_matches_pmf() {
    let (p, cap) = (0.3, 8u64);
    let m = DelayModel::Geometric { p, cap };
    let mut rng = stream_rng(5, 2);
    let n = 200_000;
    let mut hist = vec![0u64; cap as usize + 1];
    for _ in 0..n {
        hist[m.sample(&mut rng) as usize] += 1;
    }
    let den: f64 = (1..=cap).map(|k| p * (1.0 - p).powi(k as i32 - 1)).sum();
    for k in 1..=cap {
        let want = p * (1.0 - p).powi(k as i32 - 1) / den;
        let got = hist[k as usize] as f64 / n as f64;
        assert!((got - want).abs() < 0.005, "k {k}: {got} vs {want}");
    }
    assert_eq!(hist[0], 0);
}

pub fn deterministic_delay_is_exact() {
    let mut rng = stream_rng(1, 2);
    assert_eq!(DelayModel::Deterministic { k: 4 }.sample(&mut rng), 4);
    assert_eq!(DelayModel::Deterministic { k: 0 }.sample(&mut rng), 1);
}

examples! {
    loss_fraction_matches_probability,
    geometric_delay_mean_matches_pmf,
    geometric_delay_histogram_matches_pmf,
    deterministic_delay_is_exact,
}

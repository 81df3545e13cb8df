//! The nine order-book indicators and example assembly.
//!
//! Four consecutive frames compress into one time step; 512 frames give
//! the 128-step, 9-variable input matrix. Indicators 1–5, 8 and 9 see only
//! their own segment; 6 and 7 also reference the first frame of the whole
//! example window.

use crate::frame::Rdf;
use crate::ladder::Tick;

use super::FeatureError;

/// Frames per compressed time step.
pub const SEGMENT_FRAMES: usize = 4;
/// Time steps per example.
pub const TIME_STEPS: usize = 128;
/// Input variables per time step.
pub const VARIABLES: usize = 9;
/// Frames per example input window.
pub const EXAMPLE_FRAMES: usize = SEGMENT_FRAMES * TIME_STEPS;
/// Frames in the two-minute target window at two frames per second.
pub const TARGET_FRAMES: usize = 240;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiquiditySide {
    Bid,
    Ask,
}

/// A short run of consecutive frames compressed into one time step.
/// Normally four frames; fewer when the source data is ragged.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    frames: &'a [Rdf],
}

impl<'a> Segment<'a> {
    pub fn new(frames: &'a [Rdf]) -> Result<Segment<'a>, FeatureError> {
        if frames.is_empty() {
            return Err(FeatureError::InsufficientFrames { expected: 1, got: 0 });
        }
        Ok(Segment { frames })
    }

    pub fn frames(&self) -> &'a [Rdf] {
        self.frames
    }

    /// Pads a ragged segment to the nominal length by repeating the first
    /// available frame at the front, as if the missing past frames equaled
    /// the oldest one seen.
    pub fn padded_frames(&self) -> Vec<Rdf> {
        let mut out = Vec::with_capacity(SEGMENT_FRAMES);
        for _ in self.frames.len()..SEGMENT_FRAMES {
            out.push(self.frames[0].clone());
        }
        out.extend(self.frames.iter().cloned());
        out
    }
}

/// Sum over the segment of the tick displacement from its first frame.
pub fn indicator_price_integral(segment: Segment<'_>) -> f64 {
    let frames = segment.frames();
    let base = frames[0].last_traded.0;
    frames[1..].iter().map(|f| (f.last_traded.0 - base) as f64).sum()
}

/// Total unmatched money on one side within the best `depth` price levels.
fn side_total_within_depth(frame: &Rdf, side: LiquiditySide, depth: usize) -> f64 {
    let amounts: Vec<f64> = match side {
        LiquiditySide::Bid => frame
            .bid
            .iter()
            .rev()
            .filter(|(_, a)| !a.is_zero())
            .take(depth)
            .map(|(_, a)| a.to_f64())
            .collect(),
        LiquiditySide::Ask => frame
            .ask
            .iter()
            .filter(|(_, a)| !a.is_zero())
            .take(depth)
            .map(|(_, a)| a.to_f64())
            .collect(),
    };
    amounts.iter().sum()
}

/// Signed sum of frame-to-frame changes of the unmatched money on one
/// side, within the tracked depth. Cancellations count negative.
pub fn indicator_liquidity_delta(segment: Segment<'_>, side: LiquiditySide, depth: usize) -> f64 {
    let frames = segment.frames();
    frames
        .windows(2)
        .map(|w| {
            side_total_within_depth(&w[1], side, depth) - side_total_within_depth(&w[0], side, depth)
        })
        .sum()
}

/// Signed sum of matched-volume changes: negative when the trade consumed
/// bid-side money (pressing the price down), positive when it consumed the
/// ask side.
pub fn indicator_volume_direction(segment: Segment<'_>) -> f64 {
    let frames = segment.frames();
    let mut total = 0.0;
    for w in frames.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let best_bid = prev.best_bid();
        let best_ask = prev.best_ask();
        for (&tick, &after) in &next.traded {
            let delta = (after - prev.traded_at(tick)).to_f64();
            if delta <= 0.0 {
                continue;
            }
            let sign = if best_bid.is_some_and(|b| tick <= b) {
                -1.0
            } else if best_ask.is_some_and(|a| tick >= a) {
                1.0
            } else {
                // Inside the spread: fall back to the side of the last
                // traded price.
                match tick.0.cmp(&prev.last_traded.0) {
                    std::cmp::Ordering::Less => -1.0,
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.0,
                }
            };
            total += sign * delta;
        }
    }
    total
}

/// Tick displacement of the segment's final price from the price at the
/// start of the whole example window.
pub fn indicator_price_diff_from_start(start_tick: Tick, segment: Segment<'_>) -> f64 {
    let last = segment.frames().last().expect("segment is non-empty");
    (last.last_traded.0 - start_tick.0) as f64
}

/// Weight of money of one frame set: bid money over total unmatched money
/// within depth, 0.5 when balanced (or empty), 1.0 when all money bids.
fn wom_of(frames: &[&Rdf], depth: usize) -> f64 {
    let bid: f64 = frames.iter().map(|f| side_total_within_depth(f, LiquiditySide::Bid, depth)).sum();
    let ask: f64 = frames.iter().map(|f| side_total_within_depth(f, LiquiditySide::Ask, depth)).sum();
    if bid + ask == 0.0 {
        0.5
    } else {
        bid / (bid + ask)
    }
}

/// Average weight of money over the segment's frames.
pub fn indicator_wom(segment: Segment<'_>, depth: usize) -> f64 {
    let frames = segment.frames();
    let sum: f64 = frames.iter().map(|f| wom_of(&[f], depth)).sum();
    sum / frames.len() as f64
}

/// Average weight of money of several runners combined: per frame index,
/// the bid and ask money of all books are pooled before the ratio.
pub fn indicator_wom_combined(segments: &[Segment<'_>], depth: usize) -> f64 {
    let len = segments.iter().map(|s| s.frames().len()).min().unwrap_or(0);
    if len == 0 {
        return 0.5;
    }
    let mut sum = 0.0;
    for i in 0..len {
        let frames: Vec<&Rdf> = segments.iter().map(|s| &s.frames()[i]).collect();
        sum += wom_of(&frames, depth);
    }
    sum / len as f64
}

/// One model example: the input matrix plus its labeling fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub race_id: String,
    pub category: usize,
    /// `TIME_STEPS` rows of `VARIABLES` indicator values.
    pub inputs: Vec<[f64; VARIABLES]>,
    pub raw_target: f64,
    pub label: usize,
}

/// Builds the 128×9 input matrix from the traded runner's 512-frame
/// window, its competitor, and the remaining runners' books (used by the
/// combined weight-of-money column; falls back to the competitor when
/// empty).
pub fn build_example(
    traded: &[Rdf],
    competitor: &[Rdf],
    others: &[&[Rdf]],
    depth: usize,
) -> Result<Vec<[f64; VARIABLES]>, FeatureError> {
    for frames in std::iter::once(traded)
        .chain(std::iter::once(competitor))
        .chain(others.iter().copied())
    {
        if frames.len() != EXAMPLE_FRAMES {
            return Err(FeatureError::InsufficientFrames {
                expected: EXAMPLE_FRAMES,
                got: frames.len(),
            });
        }
    }
    let start_traded = traded[0].last_traded;
    let start_comp = competitor[0].last_traded;
    let mut rows = Vec::with_capacity(TIME_STEPS);
    for s in 0..TIME_STEPS {
        let range = s * SEGMENT_FRAMES..(s + 1) * SEGMENT_FRAMES;
        let seg_traded = Segment::new(&traded[range.clone()])?;
        let seg_comp = Segment::new(&competitor[range.clone()])?;
        let seg_others: Vec<Segment<'_>> = if others.is_empty() {
            vec![seg_comp]
        } else {
            others
                .iter()
                .map(|frames| Segment::new(&frames[range.clone()]))
                .collect::<Result<_, _>>()?
        };
        rows.push([
            indicator_price_integral(seg_traded),
            indicator_price_integral(seg_comp),
            indicator_liquidity_delta(seg_traded, LiquiditySide::Ask, depth),
            indicator_liquidity_delta(seg_traded, LiquiditySide::Bid, depth),
            indicator_volume_direction(seg_traded),
            indicator_price_diff_from_start(start_traded, seg_traded),
            indicator_price_diff_from_start(start_comp, seg_comp),
            indicator_wom(seg_traded, depth),
            indicator_wom_combined(&seg_others, depth),
        ]);
    }
    Ok(rows)
}

/// The model target: cumulative tick displacement from the first frame of
/// the two-minute window.
pub fn target_integral(frames: &[Rdf]) -> Result<f64, FeatureError> {
    if frames.len() != TARGET_FRAMES {
        return Err(FeatureError::InsufficientFrames {
            expected: TARGET_FRAMES,
            got: frames.len(),
        });
    }
    let base = frames[0].last_traded.0;
    Ok(frames[1..].iter().map(|f| (f.last_traded.0 - base) as f64).sum())
}

/// Largest absolute tick displacement from the window's first frame, the
/// statistic behind per-class target/stop parameterization.
pub fn max_abs_tick_variation(frames: &[Rdf]) -> f64 {
    let Some(first) = frames.first() else { return 0.0 };
    let base = first.last_traded.0;
    frames.iter().map(|f| (f.last_traded.0 - base).abs()).max().unwrap_or(0) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{frame, tick};

    /// The three worked frames: price walks 4.6 → 4.5 → 4.4 while ask
    /// money builds (+92, +98), bid money drains (−8, then −2 matched and
    /// −10 cancelled) and trades consume the bid side (−8, −2).
    fn worked_frames() -> Vec<Rdf> {
        vec![
            frame(
                0,
                "4.6",
                &[("4.5", 8.0), ("4.4", 2.0), ("4.3", 10.0)],
                &[("4.6", 100.0), ("4.7", 50.0), ("4.8", 20.0)],
                &[("4.6", 30.0)],
            ),
            frame(
                500,
                "4.5",
                &[("4.4", 2.0), ("4.3", 10.0)],
                &[("4.5", 120.0), ("4.6", 102.0), ("4.7", 40.0)],
                &[("4.5", 8.0), ("4.6", 30.0)],
            ),
            frame(
                1000,
                "4.4",
                &[],
                &[("4.4", 170.0), ("4.5", 150.0), ("4.6", 40.0)],
                &[("4.4", 2.0), ("4.5", 8.0), ("4.6", 30.0)],
            ),
        ]
    }

    #[test]
    fn price_integral_of_the_worked_segment_is_minus_three() {
        let frames = worked_frames();
        let seg = Segment::new(&frames).unwrap();
        assert_eq!(indicator_price_integral(seg), -3.0);
    }

    #[test]
    fn price_integral_of_constant_and_rising_prices() {
        let flat = vec![frame(0, "4.6", &[], &[], &[]); 4];
        assert_eq!(indicator_price_integral(Segment::new(&flat).unwrap()), 0.0);
        let rising: Vec<Rdf> = ["4.4", "4.5", "4.6"]
            .iter()
            .enumerate()
            .map(|(i, p)| frame(i as i64 * 500, p, &[], &[], &[]))
            .collect();
        assert_eq!(indicator_price_integral(Segment::new(&rising).unwrap()), 3.0);
    }

    #[test]
    fn ask_liquidity_delta_of_the_worked_segment_is_plus_190() {
        let frames = worked_frames();
        let seg = Segment::new(&frames).unwrap();
        // Depth 3 around the touch: +92 then +98.
        assert_eq!(indicator_liquidity_delta(seg, LiquiditySide::Ask, 3), 190.0);
    }

    #[test]
    fn bid_liquidity_delta_of_the_worked_segment_is_minus_20() {
        let frames = worked_frames();
        let seg = Segment::new(&frames).unwrap();
        assert_eq!(indicator_liquidity_delta(seg, LiquiditySide::Bid, 3), -20.0);
    }

    #[test]
    fn liquidity_delta_of_an_unchanged_book_is_zero() {
        let frames = vec![frame(0, "4.6", &[("4.5", 8.0)], &[("4.6", 10.0)], &[]); 4];
        let seg = Segment::new(&frames).unwrap();
        assert_eq!(indicator_liquidity_delta(seg, LiquiditySide::Ask, 3), 0.0);
        assert_eq!(indicator_liquidity_delta(seg, LiquiditySide::Bid, 3), 0.0);
    }

    #[test]
    fn volume_direction_of_the_worked_segment_is_minus_ten() {
        let frames = worked_frames();
        let seg = Segment::new(&frames).unwrap();
        assert_eq!(indicator_volume_direction(seg), -10.0);
    }

    #[test]
    fn volume_direction_without_trades_is_zero() {
        let frames = vec![frame(0, "4.6", &[("4.5", 8.0)], &[("4.6", 10.0)], &[]); 3];
        assert_eq!(indicator_volume_direction(Segment::new(&frames).unwrap()), 0.0);
    }

    #[test]
    fn volume_direction_of_ask_side_matches_is_positive() {
        let frames = vec![
            frame(0, "4.6", &[("4.5", 50.0)], &[("4.6", 60.0)], &[]),
            frame(500, "4.6", &[("4.5", 50.0)], &[("4.6", 55.0)], &[("4.6", 5.0)]),
            frame(1000, "4.6", &[("4.5", 50.0)], &[("4.6", 48.0)], &[("4.6", 12.0)]),
        ];
        assert_eq!(indicator_volume_direction(Segment::new(&frames).unwrap()), 12.0);
    }

    #[test]
    fn price_diff_from_start_of_the_worked_segment_is_minus_two() {
        let frames = worked_frames();
        let seg = Segment::new(&frames).unwrap();
        assert_eq!(indicator_price_diff_from_start(tick("4.6"), seg), -2.0);
        assert_eq!(indicator_price_diff_from_start(tick("4.4"), seg), 0.0);
        let ending_at_4_6 = vec![frame(0, "4.5", &[], &[], &[]), frame(1, "4.6", &[], &[], &[])];
        let seg_up = Segment::new(&ending_at_4_6).unwrap();
        assert_eq!(indicator_price_diff_from_start(tick("4.0"), seg_up), 6.0);
    }

    #[test]
    fn wom_is_half_when_balanced_and_one_when_all_bid() {
        let balanced = vec![frame(0, "4.6", &[("4.5", 30.0)], &[("4.6", 30.0)], &[]); 3];
        assert_eq!(indicator_wom(Segment::new(&balanced).unwrap(), 3), 0.5);
        let all_bid = vec![frame(0, "4.6", &[("4.5", 30.0)], &[], &[]); 3];
        assert_eq!(indicator_wom(Segment::new(&all_bid).unwrap(), 3), 1.0);
    }

    #[test]
    fn wom_averages_the_frame_values() {
        // Frames engineered to per-frame WoM 0.02, 0.43 and 0.45; their
        // arithmetic mean is 0.30 (the printed 0.43 does not follow from
        // the shown values).
        let frames = vec![
            frame(0, "4.6", &[("4.5", 2.0)], &[("4.6", 98.0)], &[]),
            frame(500, "4.6", &[("4.5", 43.0)], &[("4.6", 57.0)], &[]),
            frame(1000, "4.6", &[("4.5", 45.0)], &[("4.6", 55.0)], &[]),
        ];
        let seg = Segment::new(&frames).unwrap();
        assert!((indicator_wom(seg, 3) - 0.30).abs() < 1e-12);
    }

    #[test]
    fn target_integral_examples() {
        let flat = vec![frame(0, "4.6", &[], &[], &[]); TARGET_FRAMES];
        assert_eq!(target_integral(&flat).unwrap(), 0.0);

        let mut drop = vec![frame(0, "4.6", &[], &[], &[])];
        drop.extend(std::iter::repeat(frame(1, "4.5", &[], &[], &[])).take(TARGET_FRAMES - 1));
        assert_eq!(target_integral(&drop).unwrap(), -239.0);

        let mut rise = vec![frame(0, "4.6", &[], &[], &[])];
        rise.extend(std::iter::repeat(frame(1, "4.7", &[], &[], &[])).take(TARGET_FRAMES - 1));
        assert_eq!(target_integral(&rise).unwrap(), 239.0);
    }

    #[test]
    fn target_integral_needs_the_full_window() {
        let short = vec![frame(0, "4.6", &[], &[], &[]); TARGET_FRAMES - 1];
        assert!(matches!(
            target_integral(&short),
            Err(FeatureError::InsufficientFrames { expected: 240, got: 239 })
        ));
    }

    #[test]
    fn build_example_of_a_constant_stream_is_zero_except_wom() {
        let frames = vec![frame(0, "4.6", &[("4.5", 30.0)], &[("4.6", 30.0)], &[]); EXAMPLE_FRAMES];
        let rows = build_example(&frames, &frames, &[], 3).unwrap();
        assert_eq!(rows.len(), TIME_STEPS);
        for row in &rows {
            assert_eq!(row[..7], [0.0; 7]);
            assert_eq!(row[7], 0.5);
            assert_eq!(row[8], 0.5);
        }
    }

    #[test]
    fn build_example_embeds_the_worked_segment() {
        // A constant lead-in, then the worked three frames plus the
        // fourth-equals-third padding rule applied at the segment's front.
        let worked = worked_frames();
        let lead = worked[0].clone();
        let mut frames = Vec::new();
        while frames.len() < EXAMPLE_FRAMES - 4 {
            frames.push(lead.clone());
        }
        frames.push(worked[0].clone());
        frames.extend(worked.iter().cloned());
        let rows = build_example(&frames, &frames, &[], 3).unwrap();
        let last = rows[TIME_STEPS - 1];
        assert_eq!(last[0], -3.0, "price integral");
        assert_eq!(last[2], 190.0, "ask liquidity delta");
        assert_eq!(last[3], -20.0, "bid liquidity delta");
        assert_eq!(last[4], -10.0, "volume direction");
        assert_eq!(last[5], -2.0, "price diff from start");
        // WoM averages all four frames of the padded segment.
        let per_frame = [20.0 / 190.0, 20.0 / 190.0, 12.0 / 274.0, 0.0];
        let expected: f64 = per_frame.iter().sum::<f64>() / 4.0;
        assert!((last[7] - expected).abs() < 1e-12);
    }

    #[test]
    fn build_example_rejects_short_windows() {
        let frames = vec![frame(0, "4.6", &[], &[], &[]); EXAMPLE_FRAMES - 1];
        assert!(matches!(
            build_example(&frames, &frames, &[], 3),
            Err(FeatureError::InsufficientFrames { .. })
        ));
    }

    #[test]
    fn max_variation_tracks_the_extreme() {
        let frames = vec![
            frame(0, "4.6", &[], &[], &[]),
            frame(1, "4.4", &[], &[], &[]),
            frame(2, "4.9", &[], &[], &[]),
            frame(3, "4.7", &[], &[], &[]),
        ];
        assert_eq!(max_abs_tick_variation(&frames), 3.0);
    }

    #[test]
    fn scale_covariance_of_wom_and_liquidity() {
        let frames = worked_frames();
        let scaled: Vec<Rdf> = frames
            .iter()
            .map(|f| {
                let mut g = f.clone();
                for m in g.bid.values_mut().chain(g.ask.values_mut()).chain(g.traded.values_mut())
                {
                    *m = crate::money::Money::from_units(m.units() * 3);
                }
                g
            })
            .collect();
        let seg = Segment::new(&frames).unwrap();
        let seg_scaled = Segment::new(&scaled).unwrap();
        assert!((indicator_wom(seg, 3) - indicator_wom(seg_scaled, 3)).abs() < 1e-12);
        assert!(
            (indicator_liquidity_delta(seg_scaled, LiquiditySide::Ask, 3)
                - 3.0 * indicator_liquidity_delta(seg, LiquiditySide::Ask, 3))
            .abs()
                < 1e-9
        );
        assert!(
            (indicator_volume_direction(seg_scaled) - 3.0 * indicator_volume_direction(seg)).abs()
                < 1e-9
        );
    }
}

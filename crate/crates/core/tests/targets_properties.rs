mod common;

use maskfeat::hog::{ColorMode, HogConfig};
use maskfeat::imaging::{ChannelStats, VideoClip};
use maskfeat::masking::MaskMap;
use maskfeat::targets::{
    apply_mask_tokens, assemble_targets, tokenize, PatchSpec, TargetDesign, TargetKind,
    TargetSelection, TargetSpec,
};
use proptest::prelude::*;

fn clip(seed: u64, frames: usize, w: usize, h: usize) -> VideoClip {
    let mut r = common::rng(seed);
    VideoClip::new(
        (0..frames)
            .map(|_| common::random_image(&mut r, w, h, 3))
            .collect(),
    )
    .unwrap()
}

fn spec(selection: TargetSelection, design: TargetDesign) -> TargetSpec {
    TargetSpec {
        selection,
        hog: HogConfig {
            cell_size: 4,
            ..HogConfig::default()
        },
        stats: ChannelStats::new(vec![0.4, 0.5, 0.6], vec![0.2, 0.3, 0.25]).unwrap(),
        design,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn only_masked_tokens_are_supervised(seed in any::<u64>(), bits in prop::collection::vec(any::<bool>(), 2 * 2 * 3)) {
        prop_assume!(bits.iter().any(|b| *b));
        let c = clip(seed, 4, 24, 16);
        let mask = MaskMap::from_bits(2, 2, 3, bits).unwrap();
        let pspec = PatchSpec { patch_size: 8, cube_frames: 2 };
        let s = assemble_targets(&c, &mask, &pspec, &spec(TargetSelection::pixel_and_hog(), TargetDesign::CenterPatch)).unwrap();
        for set in &s.targets {
            let idx: Vec<usize> = set.entries.iter().map(|(i, _)| *i).collect();
            prop_assert_eq!(&idx, &mask.masked_indices());
            prop_assert!(set.entries.iter().all(|(_, v)| v.len() == set.dim));
        }
    }

    #[test]
    fn hog_targets_come_from_the_center_frame(seed in any::<u64>()) {
        let c = clip(seed, 4, 16, 16);
        let mut bits = vec![false; 2 * 2 * 2];
        bits[5] = true;
        let mask = MaskMap::from_bits(2, 2, 2, bits).unwrap();
        let pspec = PatchSpec { patch_size: 8, cube_frames: 2 };
        let tspec = spec(TargetSelection::Single(TargetKind::Hog), TargetDesign::CenterPatch);
        let s = assemble_targets(&c, &mask, &pspec, &tspec).unwrap();
        // token 5 = cube 1 (frames 2, 3), row 0, col 1; center offset 1 picks frame 3
        let want = &common::naive_patch_targets(&c.frames()[3], &tspec.hog, 8)[1];
        let got = &s.targets[0].entries[0].1;
        prop_assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().zip(want) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn single_frame_cubes_make_designs_agree(seed in any::<u64>()) {
        let c = clip(seed, 2, 16, 16);
        let mask = MaskMap::from_bits(2, 2, 2, vec![true, false, true, true, false, true, false, true]).unwrap();
        let pspec = PatchSpec { patch_size: 8, cube_frames: 1 };
        let sel = TargetSelection::pixel_and_hog();
        let center = assemble_targets(&c, &mask, &pspec, &spec(sel.clone(), TargetDesign::CenterPatch)).unwrap();
        let full = assemble_targets(&c, &mask, &pspec, &spec(sel, TargetDesign::FullCube)).unwrap();
        prop_assert_eq!(center.targets, full.targets);
    }

    #[test]
    fn pixel_targets_are_normalized_pixels(seed in any::<u64>(), stats in prop::array::uniform3(0.1f64..2.0)) {
        let c = clip(seed, 2, 8, 8);
        let st = ChannelStats::new(vec![0.5; 3], stats.to_vec()).unwrap();
        let tokens = tokenize(&c, &PatchSpec { patch_size: 4, cube_frames: 2 }, &st).unwrap();
        prop_assert_eq!(tokens.dim, 2 * 3 * 16);
        // token 3 is row 1, col 1; entries run frame, channel, row, col
        let tok = tokens.token(3);
        for f in 0..2 {
            for ch in 0..3 {
                for y in 0..4 {
                    for x in 0..4 {
                        let want = (c.frames()[f].get(ch, 4 + x, 4 + y) - 0.5) / stats[ch];
                        prop_assert!((tok[((f * 3 + ch) * 4 + y) * 4 + x] - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn mask_tokens_replace_only_masked(seed in any::<u64>(), bits in prop::collection::vec(any::<bool>(), 4)) {
        let c = clip(seed, 1, 8, 8);
        let tokens = tokenize(&c, &PatchSpec::image(4), &ChannelStats::identity(3)).unwrap();
        let mask = MaskMap::from_bits(1, 2, 2, bits.clone()).unwrap();
        let emb = vec![9.0; tokens.dim];
        let out = apply_mask_tokens(&tokens, &mask, &emb).unwrap();
        for (i, masked) in bits.iter().enumerate() {
            prop_assert_eq!(out.token(i), if *masked { &emb[..] } else { tokens.token(i) });
        }
    }
}

#[test]
fn full_cube_concatenates_frames_in_order() {
    let c = clip(1, 2, 16, 16);
    let mask = MaskMap::from_bits(1, 2, 2, vec![false, false, true, false]).unwrap();
    let pspec = PatchSpec {
        patch_size: 8,
        cube_frames: 2,
    };
    let tspec = TargetSpec {
        hog: HogConfig {
            cell_size: 4,
            color_mode: ColorMode::Opponent,
            ..HogConfig::default()
        },
        ..spec(
            TargetSelection::Single(TargetKind::Hog),
            TargetDesign::FullCube,
        )
    };
    let s = assemble_targets(&c, &mask, &pspec, &tspec).unwrap();
    let a = &common::naive_patch_targets(&c.frames()[0], &tspec.hog, 8)[2];
    let b = &common::naive_patch_targets(&c.frames()[1], &tspec.hog, 8)[2];
    let got = &s.targets[0].entries[0].1;
    assert_eq!(got.len(), a.len() + b.len());
    for (x, y) in got.iter().zip(a.iter().chain(b)) {
        assert!((x - y).abs() <= 1e-9);
    }
}

#[test]
fn divisibility_and_shape_errors() {
    let tspec = spec(
        TargetSelection::Single(TargetKind::Hog),
        TargetDesign::CenterPatch,
    );
    let odd = clip(2, 3, 16, 16);
    let mask = MaskMap::new(1, 2, 2).unwrap();
    assert!(assemble_targets(
        &odd,
        &mask,
        &PatchSpec {
            patch_size: 8,
            cube_frames: 2
        },
        &tspec
    )
    .is_err());
    let c = clip(2, 2, 16, 16);
    let wrong = MaskMap::new(1, 4, 4).unwrap();
    assert!(assemble_targets(
        &c,
        &wrong,
        &PatchSpec {
            patch_size: 8,
            cube_frames: 2
        },
        &tspec
    )
    .is_err());
    // patch not divisible by cell
    assert!(assemble_targets(
        &c,
        &mask,
        &PatchSpec {
            patch_size: 6,
            cube_frames: 2
        },
        &tspec
    )
    .is_err());
}

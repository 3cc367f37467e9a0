use cosearch::space::{enumerate_space, flops, ArchitectureSpec, SearchSpaceConfig};

/// `data/flops_default.txt` is written by `data/flops_golden.py`.
#[test]
fn default_space_flops_match_golden_file() {
    let config = SearchSpaceConfig::default();
    let golden: Vec<u64> =
        include_str!("data/flops_default.txt").lines().map(|l| l.trim().parse().unwrap()).collect();
    let archs = enumerate_space(&config).unwrap();
    assert_eq!(golden.len(), archs.len());
    for (arch, &want) in archs.iter().zip(&golden) {
        assert_eq!(flops(arch, &config), want, "{:?}", arch);
    }
}

fn bumped(config: &SearchSpaceConfig, arch: &ArchitectureSpec) -> Vec<ArchitectureSpec> {
    let next = |xs: &[f64], x: f64| xs.iter().position(|&v| v == x).and_then(|i| xs.get(i + 1).copied());
    let next_u = |xs: &[u32], x: u32| xs.iter().position(|&v| v == x).and_then(|i| xs.get(i + 1).copied());
    let mut out = Vec::new();
    if let Some(r) = next_u(&config.resolutions, arch.resolution) {
        out.push(ArchitectureSpec { resolution: r, ..arch.clone() });
    }
    if let Some(w) = next(&config.width_multipliers, arch.width_multiplier) {
        out.push(ArchitectureSpec { width_multiplier: w, ..arch.clone() });
    }
    if let Some(e) = next_u(&config.expansion_ratios, arch.expansion_ratio) {
        out.push(ArchitectureSpec { expansion_ratio: e, ..arch.clone() });
    }
    for s in 0..arch.stage_depths.len() {
        if let Some(d) = next_u(&config.stage_depth_choices, arch.stage_depths[s]) {
            let mut depths = arch.stage_depths.clone();
            depths[s] = d;
            out.push(ArchitectureSpec { stage_depths: depths, ..arch.clone() });
        }
    }
    out
}

#[test]
fn flops_strictly_increase_in_every_single_parameter() {
    let config = SearchSpaceConfig::default();
    let mut checked = 0;
    for arch in enumerate_space(&config).unwrap() {
        let base = flops(&arch, &config);
        for bigger in bumped(&config, &arch) {
            assert!(flops(&bigger, &config) > base, "{arch:?} -> {bigger:?}");
            checked += 1;
        }
    }
    // resolution 768, width 768, expansion 512, 5 depths x 512
    assert_eq!(checked, 768 + 768 + 512 + 5 * 512);
}

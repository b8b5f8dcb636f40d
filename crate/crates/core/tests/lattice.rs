use proptest::prelude::*;
use thermoprobe_core::lattice::disk_radius_for_size;
use thermoprobe_core::{BondCounts, ClusterSpec, Lattice, SpinConfig, ThermoParams};

/// O(K²) classification of every pair of lattice bonds.
fn brute_force_counts(lattice: &Lattice, cluster: &ClusterSpec) -> BondCounts {
    let inside = |s: u32| cluster.sites().contains(&s);
    let bonds = lattice.bonds();
    let intra = bonds.iter().filter(|&&(a, b)| inside(a) && inside(b)).count() as u64;
    let (mut bridged, mut adjacent, mut disjoint) = (0, 0, 0);
    for (k, &(a, b)) in bonds.iter().enumerate() {
        for &(c, d) in &bonds[k + 1..] {
            let shared: Vec<u32> = [a, b].into_iter().filter(|x| *x == c || *x == d).collect();
            let both_intra = inside(a) && inside(b) && inside(c) && inside(d);
            match shared.len() {
                0 if both_intra => disjoint += 1,
                1 => {
                    let mid = shared[0];
                    let ends: Vec<u32> = [a, b, c, d].into_iter().filter(|&x| x != mid).collect();
                    if both_intra {
                        adjacent += 1;
                    } else if !inside(mid) && ends.iter().all(|&e| inside(e)) && ends[0] != ends[1] {
                        bridged += 1;
                    }
                }
                _ => {}
            }
        }
    }
    BondCounts {
        bonds: bonds.len() as u64,
        intra,
        bridged,
        adjacent,
        disjoint,
    }
}

#[test]
fn every_site_has_four_bonds() {
    for side in [2, 3, 4, 7, 20] {
        let lat = Lattice::new(side).unwrap();
        let mut degree = vec![0; lat.num_sites()];
        for &(a, b) in lat.bonds() {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        assert!(degree.iter().all(|&d| d == 4), "L={side}");
        assert_eq!(lat.bonds().len(), 2 * side * side);
    }
}

#[test]
fn twenty_by_twenty() {
    let lat = Lattice::new(20).unwrap();
    assert_eq!(lat.num_sites(), 400);
    assert_eq!(lat.bonds().len(), 800);
}

#[test]
fn checkerboard_energy() {
    let lat = Lattice::new(4).unwrap();
    let bits = (0..16).map(|s| ((s / 4 + s % 4) % 2) as u8).collect();
    let config = SpinConfig::from_bits(bits).unwrap();
    let p = ThermoParams::new(1.0, 0.3, 0.1);
    assert_eq!(lat.energy(&config, &p).unwrap(), 32.0);
    let mut one = SpinConfig::aligned(16);
    one.flip(5);
    assert_eq!(lat.energy(&one, &p).unwrap(), -32.0 + 8.0);
}

#[test]
fn disks_hit_the_expected_sizes() {
    let lat = Lattice::new(20).unwrap();
    for (r2, n) in [(0, 1), (1, 5), (2, 9), (4, 13), (5, 21), (8, 25)] {
        let c = ClusterSpec::centered(&lat, (r2 as f64).sqrt()).unwrap();
        assert_eq!(c.len(), n);
        assert_eq!(disk_radius_for_size(n), Some((r2 as f64).sqrt()));
    }
    assert_eq!(disk_radius_for_size(7), None);
}

#[test]
fn radius_two_disk_matches_reference_counts() {
    let lat = Lattice::new(20).unwrap();
    let c = ClusterSpec::centered(&lat, 2.0).unwrap();
    let k = lat.bond_counts(&c).unwrap();
    assert_eq!((k.intra, k.bridged, k.adjacent, k.disjoint), (16, 8, 34, 86));
}

#[test]
fn counts_agree_with_brute_force_and_identity() {
    let lat = Lattice::new(9).unwrap();
    for size in [1, 5, 9, 13, 21, 25] {
        let c = ClusterSpec::with_size(&lat, 40, size).unwrap();
        let k = lat.bond_counts(&c).unwrap();
        assert_eq!(k, brute_force_counts(&lat, &c), "n={size}");
        assert_eq!(k.disjoint, k.intra * (k.intra.saturating_sub(1)) / 2 - k.adjacent);
        assert_eq!(k.bonds, 2 * 81);
    }
}

#[test]
fn five_site_disk_counts() {
    let lat = Lattice::new(6).unwrap();
    let c = ClusterSpec::centered(&lat, 1.0).unwrap();
    let k = lat.bond_counts(&c).unwrap();
    // a star of four bonds; each diagonal neighbour bridges one pair of arms
    assert_eq!((k.intra, k.bridged, k.adjacent, k.disjoint), (4, 4, 6, 0));
}

#[test]
fn alternating_config_cluster_magnetization() {
    let lat = Lattice::new(8).unwrap();
    let c = ClusterSpec::centered(&lat, 2f64.sqrt()).unwrap();
    assert_eq!(c.len(), 9);
    let bits: Vec<u8> = (0..64).map(|s| (s % 2) as u8).collect();
    let config = SpinConfig::from_bits(bits.clone()).unwrap();
    let direct: i64 = c.sites().iter().map(|&s| 1 - 2 * bits[s as usize] as i64).sum();
    assert_eq!(c.magnetization(&config), direct);
}

fn config_strategy() -> impl Strategy<Value = (usize, Vec<u8>)> {
    (2usize..9).prop_flat_map(|side| (Just(side), proptest::collection::vec(0u8..2, side * side)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn delta_energy_matches_recompute((side, bits) in config_strategy(), site in any::<prop::sample::Index>(), field in -2i32..3) {
        let lat = Lattice::new(side).unwrap();
        let p = ThermoParams::new(0.25, 1.0, 0.1).with_field(field as f64 * 0.5);
        let config = SpinConfig::from_bits(bits).unwrap();
        let site = site.index(lat.num_sites());
        let mut flipped = config.clone();
        flipped.flip(site);
        let direct = lat.energy(&flipped, &p).unwrap() - lat.energy(&config, &p).unwrap();
        prop_assert_eq!(lat.delta_energy(&config, site, &p).unwrap(), direct);
    }

    #[test]
    fn zero_field_energy_is_flip_symmetric((side, bits) in config_strategy()) {
        let lat = Lattice::new(side).unwrap();
        let p = ThermoParams::new(1.0, 1.0, 0.1);
        let config = SpinConfig::from_bits(bits).unwrap();
        prop_assert_eq!(lat.energy(&config, &p).unwrap(), lat.energy(&config.flipped(), &p).unwrap());
    }

    #[test]
    fn binary_form_tracks_hamiltonian((side, bits) in config_strategy(), field in -2i32..3) {
        let lat = Lattice::new(side).unwrap();
        let p = ThermoParams::new(1.0, 1.0, 0.1).with_field(field as f64);
        let config = SpinConfig::from_bits(bits).unwrap();
        let offset = -(lat.bonds().len() as f64) - p.field * lat.num_sites() as f64;
        prop_assert_eq!(lat.binary_energy(&config, &p).unwrap() + offset, lat.energy(&config, &p).unwrap());
    }
}

use scatlab::averaged::smatrix_via_representation;
use scatlab::forward::persist::{decode_smatrix, encode_smatrix};
use scatlab::forward::{partialwave_oracle, smatrix, Scatterer};
use scatlab::inverse::{scenario_uniqueness, MagneticGauge, UniquenessOptions};
use scatlab::model::sample::sample;
use scatlab::model::spec::{Decay, ElectricTerm, MagneticTerm, PotentialSpec};
use scatlab::numkit::grid::Grid;
use scatlab::{Error, ErrorKind};

fn magnetic(strength: f64) -> PotentialSpec {
    PotentialSpec {
        dim: 3,
        electric: vec![ElectricTerm::Gaussian {
            amplitude: -0.3,
            width: 0.3,
            center: [0.0; 3],
        }],
        magnetic: vec![MagneticTerm::Swirl {
            strength,
            axis: [0.0, 0.2, 1.0],
            radius: 0.8,
            center: [0.0; 3],
        }],
        decay: Decay {
            rho: 2.0,
            c: 10.0,
            radius: 1.0,
        },
        truncation: None,
    }
}

#[test]
fn magnetic_pair_is_distinguished_in_3d() {
    let grid = Grid::with_side(3, 16, 4.0).unwrap();
    let opts = UniquenessOptions {
        degree: 2,
        functional: false,
        ..Default::default()
    };
    let rep = scenario_uniqueness(&magnetic(0.3), &magnetic(0.6), 1.0, &grid, 1.0, &opts).unwrap();
    assert!(rep.field_difference > 0.0);
    assert_eq!(rep.electric_difference, 0.0);
    assert_eq!(rep.outside_difference, 0.0);
    assert!(
        rep.smatrix_distance > 10.0 * rep.unitarity_defect(),
        "{rep:?}"
    );
    assert!(rep.route_disagreement < 1e-8);
    let json = serde_json::to_value(&rep).unwrap();
    assert_eq!(json["grid"]["n"], 16);
}

#[test]
fn constructed_gauge_reproduces_the_sampled_smatrix() {
    let grid = Grid::with_side(3, 24, 4.0).unwrap();
    let spec = magnetic(0.3);
    let opts = |gauge| UniquenessOptions {
        degree: 1,
        functional: false,
        gauge,
        ..Default::default()
    };
    let a =
        scenario_uniqueness(&spec, &spec, 1.0, &grid, 1.0, &opts(MagneticGauge::Sampled)).unwrap();
    let b = scenario_uniqueness(
        &spec,
        &spec,
        1.0,
        &grid,
        1.0,
        &opts(MagneticGauge::Constructed),
    )
    .unwrap();
    let [sa, _] = a.smatrices.unwrap();
    let [sb, _] = b.smatrices.unwrap();
    // Gauge-equivalent potentials: equal S up to discretisation.
    assert!(
        sa.distance(&sb).unwrap() < 5e-2,
        "{}",
        sa.distance(&sb).unwrap()
    );
}

#[test]
fn grid_smatrix_matches_oracle_and_survives_persistence() {
    let spec = PotentialSpec::electric(
        2,
        vec![ElectricTerm::Well {
            value: -0.5,
            radius: 1.0,
            center: [0.0; 3],
        }],
        Decay {
            rho: 2.0,
            c: 10.0,
            radius: 1.0,
        },
    );
    let grid = Grid::with_side(2, 64, 4.0).unwrap();
    let sc = Scatterer::from_potential(&sample(&spec, &grid).unwrap(), 1.0).unwrap();
    let s = smatrix(&sc, 4).unwrap();
    let oracle = partialwave_oracle(&spec, 1.0, 20)
        .unwrap()
        .smatrix(4)
        .unwrap();
    assert!(s.max_entry_difference(&oracle).unwrap() < 1e-2);
    assert!(
        s.max_entry_difference(&smatrix_via_representation(&sc, 4).unwrap())
            .unwrap()
            < 1e-10
    );
    let back = decode_smatrix(&encode_smatrix(&s)).unwrap();
    assert_eq!(back, s);
}

#[test]
fn error_kinds_map_consistently() {
    let spec = PotentialSpec::free(2);
    let err = sample(&spec, &Grid::with_side(3, 8, 4.0).unwrap()).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Schema, "{err}");
    let e = Error::Precondition("x".into());
    assert_eq!(e.kind(), ErrorKind::Precondition);
}

mod adrf {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/adrf.rs"));
}
mod aht_breakdown {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/aht_breakdown.rs"));
}
mod dsl4_spectrum {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/dsl4_spectrum.rs"));
}
mod heteronuclear_transfer {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/heteronuclear_transfer.rs"));
}
mod locking_field {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/locking_field.rs"));
}
mod magnus_fingerprint {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/magnus_fingerprint.rs"));
}
mod offset_sweep {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/offset_sweep.rs"));
}
mod parse_sequence {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/parse_sequence.rs"));
}
mod per_spin_thermalization {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/per_spin_thermalization.rs"));
}
mod phase1_search {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/phase1_search.rs"));
}
mod phase2_protocol {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/phase2_protocol.rs"));
}

#[test]
fn adrf_runs() {
    adrf::run_example().unwrap();
}

#[test]
fn aht_breakdown_runs() {
    aht_breakdown::run_example().unwrap();
}

#[test]
fn dsl4_spectrum_runs() {
    dsl4_spectrum::run_example().unwrap();
}

#[test]
fn heteronuclear_transfer_runs() {
    heteronuclear_transfer::run_example().unwrap();
}

#[test]
fn locking_field_runs() {
    locking_field::run_example().unwrap();
}

#[test]
fn magnus_fingerprint_runs() {
    magnus_fingerprint::run_example().unwrap();
}

#[test]
fn offset_sweep_runs() {
    offset_sweep::run_example().unwrap();
}

#[test]
fn parse_sequence_runs() {
    parse_sequence::run_example().unwrap();
}

#[test]
fn per_spin_thermalization_runs() {
    per_spin_thermalization::run_example().unwrap();
}

#[test]
fn phase1_search_runs() {
    phase1_search::run_example().unwrap();
}

#[test]
fn phase2_protocol_runs() {
    phase2_protocol::run_example().unwrap();
}

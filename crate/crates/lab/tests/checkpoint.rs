use perch_core::policy::ObsNorm;
use perch_core::sac::{Agent, SacConfig};
use perch_lab::checkpoint::{Checkpoint, MAGIC};
use perch_lab::LabError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sample() -> Checkpoint {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let agent = Agent::new(&SacConfig::default(), ObsNorm::default(), &mut rng);
    let other = Agent::new(&SacConfig::default(), ObsNorm::default(), &mut rng);
    Checkpoint::from_agent(&agent, &other.actor, "ab12", 7, 1, 300, 250)
}

fn rejected(bytes: &[u8]) -> String {
    match Checkpoint::from_bytes(bytes) {
        Err(LabError::Checkpoint(m)) => m,
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn round_trip_is_exact() {
    let c = sample();
    let bytes = c.to_bytes();
    assert_eq!(&bytes[..8], MAGIC);
    let back = Checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.to_bytes(), bytes);
    assert_eq!(back.header.seed, 7);
    assert_eq!(back.header.best_episode, 250);
    assert_ne!(back.actor_named("best"), back.actor_named("final"));
}

#[test]
fn save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.bin");
    let c = sample();
    c.save(&p).unwrap();
    assert_eq!(Checkpoint::load(&p).unwrap(), c);
}

#[test]
fn any_flipped_byte_is_detected() {
    let bytes = sample().to_bytes();
    for i in (0..bytes.len()).step_by(bytes.len() / 37) {
        let mut b = bytes.clone();
        b[i] ^= 0x10;
        assert!(Checkpoint::from_bytes(&b).is_err(), "byte {i}");
    }
}

#[test]
fn truncation_is_detected() {
    let bytes = sample().to_bytes();
    assert!(rejected(&bytes[..bytes.len() - 9]).contains("checksum"));
    assert!(rejected(&bytes[..20]).contains("short"));
}

#[test]
fn resealed_bad_magic_is_rejected() {
    use sha2::{Digest, Sha256};
    let mut bytes = sample().to_bytes();
    let n = bytes.len() - 32;
    bytes[0] = b'X';
    let sum = Sha256::digest(&bytes[..n]);
    bytes[n..].copy_from_slice(&sum);
    assert!(rejected(&bytes).contains("not a checkpoint"));
}

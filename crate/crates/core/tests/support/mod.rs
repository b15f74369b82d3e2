pub mod gradcheck;
pub mod random_kg;

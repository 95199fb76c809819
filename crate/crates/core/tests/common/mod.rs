pub mod bicubic;
pub mod corpus;
pub mod gradcheck;
pub mod reference;

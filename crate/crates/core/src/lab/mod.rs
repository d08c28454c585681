pub mod corpus;
pub mod inequality;
pub mod kernel;

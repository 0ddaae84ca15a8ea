pub mod catalog;
pub mod codegen;
pub mod diag;
pub mod graph;
pub mod lll;
pub mod scenario;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod vm;
pub mod world;
mod xml;

pub use xml::XmlError;

pub mod numeric;
pub mod qseries;
pub mod symbolic;
pub mod catalog;
pub mod extremal;
pub mod connection;
pub mod engine;
pub mod golden;
pub mod scan;
pub mod report;
pub use rug;

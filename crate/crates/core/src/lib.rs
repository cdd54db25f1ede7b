pub mod annotations;
pub mod cli;
pub mod ir;
pub mod oracle;
pub mod pta;
pub mod reflection;
pub mod soundness;

pub mod certify;
pub mod dwell;
pub mod expr;
pub mod job;
pub mod model;
pub mod sim;
pub mod smallgain;
pub mod timegrid;

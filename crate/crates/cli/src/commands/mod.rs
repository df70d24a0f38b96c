pub mod compare;
pub mod evaluate;
pub mod make_gt;
pub mod report;
pub mod split;

//! Deterministic simulated social platform.
//!
//! Generates ranked homepage feeds from an account's interaction history
//! via planted, configurable engagement weights, so every estimator
//! downstream can be validated against known ground truth.

pub mod account;
pub mod feed;
pub mod library;
pub mod params;

pub use account::{AccountState, HistoryEntry, TargetRef};
pub use feed::{candidate_posts, generate_feed, FeedEntry, FeedPage};
pub use library::{
    ContentLibrary, PostRecord, SearchResults, SourceKind, SourceRecord, TopicUniverse,
    COOKING_LABEL, DEFAULT_PRIMER_TOPICS, OTHER_TOPIC,
};
pub use params::{Interaction, LibraryParams, PlatformParams, SearchMode};

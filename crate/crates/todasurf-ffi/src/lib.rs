//! Placeholder; populated once the core API stabilizes.

//! Host of the `acceptance` test target; run it with
//! `cargo test -p cwm-tables --release --test acceptance`.

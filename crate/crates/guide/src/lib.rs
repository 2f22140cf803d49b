//! Each chapter of `book/` is pulled in as module docs so `cargo test`
//! runs its Rust snippets. Editing a chapter is enough to update the tests.

macro_rules! chapters {
    ($($module:ident => $file:literal),* $(,)?) => {
        $(
            #[cfg(doctest)]
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            pub mod $module {}
        )*
    };
}

chapters! {
    intro => "intro.md",
    format => "format.md",
    content => "content.md",
    supersession => "supersession.md",
    trust => "trust.md",
    polling => "polling.md",
    node => "node.md",
    gossip => "gossip.md",
    cli => "cli.md",
}

//! Guide chapters compiled as doc-tests, so every snippet in the book runs.

macro_rules! chapters {
    ($($name:ident => $file:literal),* $(,)?) => {
        $(
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            pub mod $name {}
        )*
    };
}

chapters! {
    introduction => "introduction.md",
    layout => "layout.md",
    tables => "tables.md",
    aggregation => "aggregation.md",
    perspicuity => "perspicuity.md",
    ecological => "ecological.md",
    elicitation => "elicitation.md",
    robustness => "robustness.md",
    formats => "formats.md",
    rendering => "rendering.md",
    service => "service.md",
    cli => "cli.md",
}

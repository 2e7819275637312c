use std::cell::RefCell;

use tree_sitter::Parser;

use super::LanguageId;

thread_local! {
    static PARSERS: RefCell<[Option<Parser>; 4]> = const { RefCell::new([None, None, None, None]) };
}

fn slot(language: LanguageId) -> usize {
    match language {
        LanguageId::Java => 0,
        LanguageId::Python => 1,
        LanguageId::JavaScript => 2,
        LanguageId::C => 3,
    }
}

/// Runs `f` with this thread's parser for `language`, creating it on first use.
///
/// Parsers are not shareable across threads, so each thread keeps its own.
pub fn with_parser<R>(language: LanguageId, f: impl FnOnce(&mut Parser) -> R) -> R {
    PARSERS.with(|cell| {
        let mut parsers = cell.borrow_mut();
        let parser = parsers[slot(language)].get_or_insert_with(|| {
            let mut parser = Parser::new();
            parser
                .set_language(&language.grammar())
                .expect("vendored grammar is ABI compatible");
            parser
        });
        f(parser)
    })
}

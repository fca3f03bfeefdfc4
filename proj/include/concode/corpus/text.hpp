#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace concode::corpus {

std::string to_lower(std::string_view s);

// Splits an identifier at lower-to-upper case boundaries and at non
// alphanumeric separators. Acronym runs stay together up to the capital that
// starts the next word: parseHTMLFile -> parse, html, file. Pieces are
// lower-cased.
std::vector<std::string> camel_split(std::string_view name);

// Turns Javadoc text into NL tokens. Comment delimiters, HTML tags and inline
// tag markers ({@link X}, {@code X}) are removed, keeping the enclosed words;
// {@inheritDoc} and everything from the first block tag (@param, @return,
// @throws, ...) onward is dropped. Tokens are lower-cased; camel-cased words
// are followed by their split pieces.
std::vector<std::string> strip_doc(std::string_view doc);

// Vocabulary tokens contributed by one identifier: the lower-cased original,
// followed by its camel pieces when there is more than one.
std::vector<std::string> word_tokens(std::string_view word);

}  // namespace concode::corpus

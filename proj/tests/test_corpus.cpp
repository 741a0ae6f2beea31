#include <gtest/gtest.h>

#include "lim/corpus.hpp"
#include "lim/error.hpp"
#include "oracles.hpp"

using namespace lim::corpus;

TEST(NormalizeText, CollapsesWhitespace) {
  EXPECT_EQ(normalize_text("a\t\tb   c"), "a b c");
  EXPECT_EQ(normalize_text("  lead\nand trail \r\n"), "lead and trail");
}

TEST(NormalizeText, DropsFormulaSpans) {
  EXPECT_EQ(normalize_text("energy $E = mc^2$ here"), "energy here");
  EXPECT_EQ(normalize_text("where x^2 grows"), "where grows");
  EXPECT_EQ(normalize_text("a=3 holds"), "holds");
  EXPECT_EQ(normalize_text("sum ∑1 over"), "sum over");
  EXPECT_EQ(normalize_text("noise %$#@! gone"), "noise gone");
}

TEST(NormalizeText, KeepsOrdinaryWords) {
  EXPECT_EQ(normalize_text("the e.g. case, and U.S. law."), "the e.g. case, and U.S. law.");
  EXPECT_EQ(normalize_text("Stahl- und Eisenwerk"), "Stahl- und Eisenwerk");
  EXPECT_EQ(normalize_text("café naïve"), "café naïve");
}

TEST(NormalizeText, Empty) {
  EXPECT_EQ(normalize_text(""), "");
  EXPECT_EQ(normalize_text(" \t\n "), "");
}

TEST(NormalizeText, OutputHasNoTabsOrDoubleSpaces) {
  lim::Rng rng(3);
  const std::string alphabet = "ab \t\n$=^1.,";
  for (int trial = 0; trial < 500; ++trial) {
    std::string raw;
    const std::size_t len = rng.index(40);
    for (std::size_t i = 0; i < len; ++i) raw += alphabet[rng.index(alphabet.size())];
    const std::string clean = normalize_text(raw);
    EXPECT_EQ(clean.find('\t'), std::string::npos) << raw;
    EXPECT_EQ(clean.find('\n'), std::string::npos) << raw;
    EXPECT_EQ(clean.find("  "), std::string::npos) << raw;
    if (!clean.empty()) {
      EXPECT_NE(clean.front(), ' ');
      EXPECT_NE(clean.back(), ' ');
    }
    EXPECT_EQ(normalize_text(clean), clean) << raw;
  }
}

TEST(SplitSentences, TerminalPeriod) {
  EXPECT_EQ(split_sentences("A cat. A dog."), (std::vector<std::string>{"A cat.", "A dog."}));
  EXPECT_EQ(split_sentences("Stop! Why? Yes."),
            (std::vector<std::string>{"Stop!", "Why?", "Yes."}));
}

TEST(SplitSentences, Abbreviations) {
  EXPECT_EQ(split_sentences("Fig. 1 shows X."), (std::vector<std::string>{"Fig. 1 shows X."}));
  EXPECT_EQ(split_sentences("See Fig. The valve."), (std::vector<std::string>{"See Fig. The valve."}));
  EXPECT_EQ(split_sentences("Smith et al. Showed it."),
            (std::vector<std::string>{"Smith et al. Showed it."}));
  EXPECT_EQ(split_sentences("Made in the U.S. Then sold."),
            (std::vector<std::string>{"Made in the U.S. Then sold."}));
}

TEST(SplitSentences, NoSplitBeforeLowercase) {
  EXPECT_EQ(split_sentences("value 3.5 mm. then more"),
            (std::vector<std::string>{"value 3.5 mm. then more"}));
}

TEST(SplitSentences, NoTerminator) {
  EXPECT_EQ(split_sentences("one sentence"), (std::vector<std::string>{"one sentence"}));
  EXPECT_TRUE(split_sentences("").empty());
}

TEST(CleanDocument, NormalizesBeforeSplitting) {
  const CleanDocument doc = clean_document({"d1", "First  part. $x=1$\tSecond part.", Section::kClaims});
  EXPECT_EQ(doc.id, "d1");
  ASSERT_EQ(doc.sentences.size(), 2u);
  EXPECT_EQ(doc.sentences[1], "Second part.");
  for (const auto& s : doc.sentences) EXPECT_FALSE(s.empty());
}

TEST(Ingest, JsonlInOrder) {
  fixtures::TempDir dir;
  const auto path = dir.write("docs.jsonl",
                              R"({"id":"a","text":"One."})"
                              "\n"
                              R"({"id":"b","text":"Two.","section":"claims"})"
                              "\n\n"
                              R"({"id":"c","text":"Three."})"
                              "\n");
  const auto docs = ingest_documents(path, InputFormat::kJsonl);
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].id, "a");
  EXPECT_EQ(docs[1].section, Section::kClaims);
  EXPECT_EQ(docs[2].text, "Three.");
}

TEST(Ingest, Tsv) {
  fixtures::TempDir dir;
  const auto path = dir.write("docs.tsv", "x\tHello there.\ny\tWith\ttabs\n");
  const auto docs = ingest_documents(path, InputFormat::kTsv);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[1].id, "y");
  EXPECT_EQ(docs[1].text, "With\ttabs");
}

TEST(Ingest, MissingTextNamesFieldAndLine) {
  fixtures::TempDir dir;
  const auto path = dir.write("docs.jsonl", "{\"id\":\"a\",\"text\":\"ok\"}\n{\"id\":\"b\"}\n");
  try {
    ingest_documents(path, InputFormat::kJsonl);
    FAIL() << "expected an error";
  } catch (const lim::Error& e) {
    EXPECT_EQ(e.kind(), lim::ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("missing field: text at line 2"), std::string::npos)
        << e.what();
  }
}

TEST(Ingest, MalformedRecordNamesLine) {
  fixtures::TempDir dir;
  const auto path = dir.write("docs.jsonl", "{\"id\":\"a\",\"text\":\"ok\"}\n\n{not json\n");
  try {
    ingest_documents(path, InputFormat::kJsonl);
    FAIL() << "expected an error";
  } catch (const lim::Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Ingest, EmptyFileIsEmptyStream) {
  fixtures::TempDir dir;
  EXPECT_TRUE(ingest_documents(dir.write("empty.jsonl", ""), InputFormat::kJsonl).empty());
}

TEST(Ingest, MissingFileIsIoError) {
  try {
    ingest_documents("/nonexistent/docs.jsonl", InputFormat::kJsonl);
    FAIL();
  } catch (const lim::Error& e) {
    EXPECT_EQ(e.kind(), lim::ErrorKind::kIo);
  }
}

TEST(Section, RoundTrip) {
  for (Section s : {Section::kTitle, Section::kAbstract, Section::kClaims, Section::kDescription,
                    Section::kOther}) {
    EXPECT_EQ(parse_section(section_name(s)), s);
  }
}

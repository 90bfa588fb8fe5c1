#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "phoco/normalizer.hpp"
#include "phoco/phonetics.hpp"
#include "phoco/random.hpp"

namespace phoco {
namespace {

TEST(Phonemize, EmptyInput) {
  EXPECT_EQ(phonemize("", Representation::IPA), "");
  EXPECT_EQ(phonemize("", Representation::Wbet), "");
}

TEST(Phonemize, PlainIsIdentity) {
  EXPECT_EQ(phonemize("coca cola", Representation::Plain), "coca cola");
}

TEST(Phonemize, QuesoChico) {
  EXPECT_EQ(phonemize("queso chico", Representation::IPA), "keso tʃiko");
  EXPECT_EQ(phonemize("queso chico", Representation::Wbet), "keso tSiko");
}

TEST(Phonemize, MexicanSpanishRules) {
  const auto ipa = [](std::string_view s) { return phonemize(s, Representation::IPA); };
  EXPECT_EQ(ipa("hola"), "ola");
  EXPECT_EQ(ipa("cielo casa"), "sielo kasa");
  EXPECT_EQ(ipa("zapato"), "sapato");
  EXPECT_EQ(ipa("llave yo"), "ʝabe ʝo");
  EXPECT_EQ(ipa("muy y rey"), "mui i rei");
  EXPECT_EQ(ipa("niño"), "niɲo");
  EXPECT_EQ(ipa("jugo gente gato"), "xugo xente gato");
  EXPECT_EQ(ipa("guerra guiso"), "gera giso");
  EXPECT_EQ(ipa("pingüino"), "pingwino");
  EXPECT_EQ(ipa("perro pero rosa"), "pero peɾo rosa");
  EXPECT_EQ(ipa("vaca taxi"), "baka taksi");
  EXPECT_EQ(ipa("camión azúcar"), "kamion asukaɾ");
}

TEST(Phonemize, WbetMirrorsIpa) {
  EXPECT_EQ(phonemize("llave niño perro pero", Representation::Wbet), "jjabe nin~o perro per(o");
  EXPECT_EQ(phonemize("rosa gente", Representation::Wbet), "rrosa xente");
}

TEST(Phonemize, UncoveredCharacterIsADefect) {
  EXPECT_THROW(phonemize("caf\xC3\xA7", Representation::IPA), std::logic_error);  // ç
}

TEST(G2PRuleTable, RejectsShadowedRules) {
  EXPECT_THROW(G2PRuleTable::parse(std::string_view("c\tk\nch\ttʃ\n")), std::invalid_argument);
}

TEST(G2PRuleTable, RejectsIncompleteTables) {
  EXPECT_THROW(G2PRuleTable::parse(std::string_view("a\ta\n")), std::invalid_argument);
}

TEST(G2PRuleTable, ShippedFilesMatchDefaults) {
  for (const auto& [file, builtin] :
       {std::pair{"ipa.tsv", kDefaultIpaRules}, std::pair{"wbet.tsv", kDefaultWbetRules}}) {
    std::ifstream in(std::string(PHOCO_DATA_DIR) + "/" + file);
    ASSERT_TRUE(in) << file;
    const auto from_file = G2PRuleTable::parse(in);
    const auto embedded = G2PRuleTable::parse(builtin);
    ASSERT_EQ(from_file.rules().size(), embedded.rules().size());
    for (std::size_t i = 0; i < embedded.rules().size(); ++i) {
      EXPECT_EQ(from_file.rules()[i].graphemes, embedded.rules()[i].graphemes);
      EXPECT_EQ(from_file.rules()[i].phones, embedded.rules()[i].phones);
    }
  }
}

TEST(Phonetics, CustomTablesOverrideDefaults) {
  std::string table(kDefaultIpaRules);
  table.replace(table.find("z\ts"), 3, "z\tθ");  // peninsular distinction
  const Phonetics castilian(G2PRuleTable::parse(std::string_view(table)),
                            G2PRuleTable::parse(kDefaultWbetRules));
  EXPECT_EQ(castilian.phonemize("zapato", Representation::IPA), "θapato");
}

std::size_t separators(std::string_view s) { return std::count(s.begin(), s.end(), ' '); }

TEST(PhonemizeProperty, WordCountPreservedAndDeterministic) {
  const auto rules = NormRules::defaults();
  Rng rng(11);
  const std::u32string letters = G2PRuleTable::alphabet() + U"   ";
  for (int trial = 0; trial < 2000; ++trial) {
    std::u32string raw;
    for (std::uint64_t i = 0, n = rng.below(25); i < n; ++i) raw.push_back(letters[rng.below(letters.size())]);
    const auto text = normalize(utf8_encode(raw), rules);
    for (auto rep : kAllRepresentations) {
      const auto out = phonemize(text, rep);
      ASSERT_EQ(separators(out), separators(text)) << text;
      ASSERT_EQ(out, phonemize(text, rep));
    }
    ASSERT_EQ(phonemize(text, Representation::Plain), text);
  }
}

}  // namespace
}  // namespace phoco

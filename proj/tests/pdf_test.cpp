#include <gtest/gtest.h>

#include <zlib.h>

#include "support.hpp"
#include "textbook/error.hpp"
#include "textbook/pdf.hpp"
#include "textbook/unicode.hpp"

namespace textbook {
namespace {

// Assembles numbered objects into a file with a correct xref table.
std::string assemble(const std::vector<std::string>& objects, const std::string& trailer_extra = "") {
  std::string out = "%PDF-1.4\n%\xe2\xe3\xcf\xd3\n";
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    offsets.push_back(out.size());
    out += std::to_string(i + 1) + " 0 obj\n" + objects[i] + "\nendobj\n";
  }
  const std::size_t xref = out.size();
  out += "xref\n0 " + std::to_string(objects.size() + 1) + "\n0000000000 65535 f \n";
  for (std::size_t off : offsets) {
    char line[32];
    std::snprintf(line, sizeof line, "%010zu 00000 n \n", off);
    out += line;
  }
  out += "trailer\n<< /Size " + std::to_string(objects.size() + 1) + " /Root 1 0 R " + trailer_extra + ">>\nstartxref\n" +
         std::to_string(xref) + "\n%%EOF\n";
  return out;
}

std::string stream(const std::string& dict_extra, const std::string& data) {
  return "<< /Length " + std::to_string(data.size()) + " " + dict_extra + ">>\nstream\n" + data + "\nendstream";
}

std::string deflate(const std::string& data) {
  uLongf len = compressBound(data.size());
  std::string out(len, '\0');
  compress2(reinterpret_cast<Bytef*>(out.data()), &len, reinterpret_cast<const Bytef*>(data.data()), data.size(), 9);
  out.resize(len);
  return out;
}

std::string page_text(const pdf::ParsedPdf& parsed, std::size_t i) { return unicode::encode_utf8(parsed.pages.at(i)); }

TEST(PdfWriter, RoundTripsLinesTitleAndOutline) {
  const std::vector<std::vector<std::string>> pages = {
      {"First page line one.", "Line two (with parens) and \\ backslash."},
      {"Hello world"},
      {"Caf\xc3\xa9 na\xc3\xafve \xe2\x80\x94 dash"},
  };
  const std::string bytes = testing::make_pdf(pages, {{"Intro", 1}, {"Body", 2}}, "A Title");
  const pdf::ParsedPdf parsed = pdf::read(bytes);
  ASSERT_EQ(parsed.pages.size(), 3u);
  EXPECT_EQ(parsed.title, "A Title");
  EXPECT_EQ(page_text(parsed, 0), "First page line one.\nLine two (with parens) and \\ backslash.");
  EXPECT_EQ(page_text(parsed, 1), "Hello world");
  EXPECT_EQ(page_text(parsed, 2), "Caf\xc3\xa9 na\xc3\xafve \xe2\x80\x94 dash");
  ASSERT_EQ(parsed.outline.size(), 2u);
  EXPECT_EQ(parsed.outline[1].title, "Body");
  EXPECT_EQ(parsed.outline[1].page, 2);
}

TEST(PdfWriter, CompressionDoesNotChangeText) {
  const std::vector<std::vector<std::string>> pages = {{"alpha beta", "gamma"}, {"delta"}};
  pdf::WriterOptions plain;
  plain.compress = false;
  const auto a = pdf::read(pdf::write_text_pdf(pages, {}, plain));
  const auto b = pdf::read(pdf::write_text_pdf(pages));
  EXPECT_EQ(a.pages, b.pages);
}

TEST(PdfWriter, OutputIsDeterministic) {
  const std::vector<std::vector<std::string>> pages = {{"same input"}};
  EXPECT_EQ(pdf::write_text_pdf(pages), pdf::write_text_pdf(pages));
}

TEST(PdfReader, RejectsEmptyAndGarbage) {
  for (const std::string& bad : {std::string(), std::string("not a pdf at all"), std::string("%PDF-1.4\n%%EOF")}) {
    try {
      pdf::read(bad);
      FAIL() << "accepted: " << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::malformed_pdf);
    }
  }
}

TEST(PdfReader, RejectsEncryptedFiles) {
  const std::string bytes = assemble({"<< /Type /Catalog /Pages 2 0 R >>", "<< /Type /Pages /Kids [] /Count 0 >>",
                                      "<< /Filter /Standard /V 1 /R 2 >>"},
                                     "/Encrypt 3 0 R ");
  try {
    pdf::read(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::malformed_pdf);
  }
}

TEST(PdfReader, ToUnicodeMapsKerningAndInheritedResources) {
  const std::string cmap =
      "/CIDInit /ProcSet findresource begin 12 dict begin begincmap\n"
      "1 begincodespacerange <00> <FF> endcodespacerange\n"
      "2 beginbfchar <01> <0048> <02> <0069> endbfchar\n"
      "1 beginbfrange <10> <12> <0061> endbfrange\n"
      "endcmap CMapName currentdict /CMap defineresource pop end end";
  const std::string content =
      "BT /F1 12 Tf 72 700 Td [(\\001\\002) -300 (\\020\\021\\022)] TJ 0 -14 Td <0102> Tj ET";
  const std::string bytes = assemble({
      "<< /Type /Catalog /Pages 2 0 R >>",
      "<< /Type /Pages /Kids [3 0 R] /Count 1 /Resources << /Font << /F1 4 0 R >> >> >>",
      "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Contents 5 0 R >>",
      "<< /Type /Font /Subtype /Type1 /BaseFont /Custom /ToUnicode 6 0 R >>",
      stream("/Filter /FlateDecode", deflate(content)),
      stream("", cmap),
  });
  const auto parsed = pdf::read(bytes);
  ASSERT_EQ(parsed.pages.size(), 1u);
  EXPECT_EQ(page_text(parsed, 0), "Hi abc\nHi");
}

TEST(PdfReader, DifferencesEncodingAndFormXObjects) {
  const std::string form = "BT /F1 10 Tf 10 10 Td (from form) Tj ET";
  const std::string content = "BT /F1 12 Tf 72 700 Td (Ab) Tj ET q /Fm1 Do Q";
  const std::string bytes = assemble({
      "<< /Type /Catalog /Pages 2 0 R >>",
      "<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
      "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Contents 5 0 R "
      "/Resources << /Font << /F1 4 0 R >> /XObject << /Fm1 6 0 R >> >> >>",
      "<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica "
      "/Encoding << /BaseEncoding /WinAnsiEncoding /Differences [65 /eacute] >> >>",
      stream("", content),
      stream("/Type /XObject /Subtype /Form /BBox [0 0 100 100] /Resources << /Font << /F1 4 0 R >> >>", form),
  });
  const auto parsed = pdf::read(bytes);
  ASSERT_EQ(parsed.pages.size(), 1u);
  EXPECT_EQ(page_text(parsed, 0), "\xc3\xa9" "b\nfrom form");
}

TEST(PdfReader, PageWithoutTextYieldsEmptyPage) {
  const std::string bytes = assemble({
      "<< /Type /Catalog /Pages 2 0 R >>",
      "<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
      "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Contents 4 0 R >>",
      stream("", "0 0 m 100 100 l S"),
  });
  const auto parsed = pdf::read(bytes);
  ASSERT_EQ(parsed.pages.size(), 1u);
  EXPECT_TRUE(parsed.pages[0].empty());
}

TEST(Layout, WrapsWordsIntoPages) {
  const auto pages = pdf::layout_text("aaa bbb ccc ddd eee", 7, 2);
  ASSERT_EQ(pages.size(), 2u);
  EXPECT_EQ(pages[0], (std::vector<std::string>{"aaa bbb", "ccc ddd"}));
  EXPECT_EQ(pages[1], (std::vector<std::string>{"eee"}));
}

}  // namespace
}  // namespace textbook

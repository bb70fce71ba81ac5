#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "trafficnet/csv.hpp"
#include "trafficnet/kv.hpp"

using namespace trafficnet;

TEST_CASE("doubles survive a format/parse round trip bit-exactly") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    double v = dist(rng);
    auto parsed = parse_f64(format_f64(v));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == v);
  }
  CHECK(format_f64(0.1) == "0.1");
  CHECK(format_f64(-0.0) == "-0");
}

TEST_CASE("integer and float parsing rejects junk and partial matches") {
  CHECK_FALSE(parse_i64("").has_value());
  CHECK_FALSE(parse_i64("12x").has_value());
  CHECK_FALSE(parse_i64("1.5").has_value());
  CHECK(parse_i64("-42").value() == -42);
  CHECK_FALSE(parse_f64("abc").has_value());
  CHECK_FALSE(parse_f64("1.5e").has_value());
  CHECK(parse_f64("-0.25").value() == -0.25);
}

TEST_CASE("csv split keeps empty fields") {
  std::vector<std::string_view> f;
  split_csv("a,,c", f);
  REQUIRE(f.size() == 3);
  CHECK(f[0] == "a");
  CHECK(f[1].empty());
  CHECK(f[2] == "c");

  split_csv("", f);
  REQUIRE(f.size() == 1);
  CHECK(f[0].empty());
}

TEST_CASE("line reader strips carriage returns and digests raw bytes") {
  tsup::TempDir dir;
  tsup::write_file(dir.path / "a.csv", "x,y\r\n1,2\n");
  LineReader reader(dir.path / "a.csv");
  std::string line;
  REQUIRE(reader.next(line));
  CHECK(line == "x,y");
  REQUIRE(reader.next(line));
  CHECK(line == "1,2");
  CHECK_FALSE(reader.next(line));
  CHECK(reader.digest() != kFnvOffset);
}

TEST_CASE("csv writer emits rows with stable layout") {
  tsup::TempDir dir;
  auto path = dir.path / "w.csv";
  {
    CsvWriter w(path);
    w.write_header("A,B,C");
    w.field_i64(1);
    w.field_f64(2.5);
    w.field_empty();
    w.end_row();
    w.close();
  }
  CHECK(tsup::read_file(path) == "A,B,C\n1,2.5,\n");
}

TEST_CASE("kv files parse comments, blanks and report bad lines") {
  auto kv = KvFile::parse("# corpus\nticks = 100\n\nname = x # trailing\n");
  CHECK(kv.get_i64("ticks", 0) == 100);
  CHECK(kv.get("name").value() == "x");
  CHECK(kv.get_i64("absent", 7) == 7);
  CHECK_THROWS(KvFile::parse("not a pair\n"));
  CHECK_THROWS(kv.get_i64("name", 0));  // "x" is not an integer
}

TEST_CASE("kv booleans accept the usual spellings") {
  auto kv = KvFile::parse("a = true\nb = 0\nc = yes\nd = maybe\n");
  CHECK(kv.get_bool("a", false));
  CHECK_FALSE(kv.get_bool("b", true));
  CHECK(kv.get_bool("c", false));
  CHECK(kv.get_bool("absent", true));
  CHECK_THROWS(kv.get_bool("d", false));
}

TEST_CASE("kv serialization round-trips") {
  KvFile kv;
  kv.set_i64("a", -3);
  kv.set_f64("b", 0.25);
  kv.set("c", "hello");
  auto again = KvFile::parse(kv.to_text());
  CHECK(again.get_i64("a", 0) == -3);
  CHECK(again.get_f64("b", 0) == 0.25);
  CHECK(again.get("c").value() == "hello");
}

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "ctsgrid/case_io.hpp"
#include "ctsgrid/network.hpp"
#include "ctsgrid/raw_import.hpp"
#include "ctsgrid/topology.hpp"
#include "helpers.hpp"

using namespace ctsgrid;
using testutil::fixture;

namespace {

// Linear chain 1-2-3-4-5 with a generator at bus 5.
Network chain5() {
  std::vector<Bus> buses;
  for (int id = 1; id <= 5; ++id) {
    Bus b;
    b.id = id;
    b.base_kv = 132.0;
    b.kind = id == 1 ? BusKind::slack : BusKind::pq;
    buses.push_back(b);
  }
  std::vector<Branch> branches;
  for (int id = 1; id <= 4; ++id) {
    Branch br;
    br.id = id;
    br.from_bus = id;
    br.to_bus = id + 1;
    br.x = 0.1;
    branches.push_back(br);
  }
  Generator g;
  g.id = 1;
  g.bus = 5;
  g.p_max = 50.0;
  g.q_min = -10.0;
  g.q_max = 10.0;
  return Network(100.0, buses, branches, {g});
}

const char* kMinimalRawHeader =
    "0, 100.0, 33, 0, 0, 60.0\n"
    "minimal test case\n"
    "two buses\n"
    "1, 'B1', 132.0, 3, 1, 1, 1, 1.02, 0.0\n"
    "2, 'B2', 132.0, 1, 1, 1, 1, 1.0, 0.0\n"
    "0 / end of bus data\n";

std::string minimal_raw(const std::string& load_block, const std::string& branch_block) {
  return std::string(kMinimalRawHeader) + load_block +
         "0 / end of load data\n"
         "0 / end of fixed shunt data\n"
         "1, '1', 50.0, 10.0, 40.0, -20.0, 1.02, 0, 100.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1, 100.0, "
         "100.0, 0.0\n"
         "0 / end of generator data\n" +
         branch_block +
         "0 / end of branch data\n"
         "0 / end of transformer data\n"
         "Q\n";
}

const char* kGoodLoad = "2, '1', 1, 1, 1, 30.0, 10.0\n";
const char* kGoodBranch = "1, 2, '1', 0.01, 0.05, 0.02, 100.0, 0.0, 120.0, 0.0, 0.0, 0.0, 0.0, 1\n";

} // namespace

TEST_SUITE("netmodel") {

TEST_CASE("every shipped case file round-trips through the text form exactly") {
  const char* names[] = {"case2.grid",           "case14.grid", "case14_from_raw.grid",
                         "case14_stressed.grid", "corridor.grid",   "grid118.grid",
                         "grid300.grid",         "sixbus.grid", "case14_day1.grid",
                         "case14_day2.grid",     "case14_day3.grid"};
  for (const char* name : names) {
    CAPTURE(name);
    const Network net = load_case(fixture(name));
    const Network again = parse_case(serialize_case(net));
    CHECK(net == again);
  }
}

TEST_CASE("serialization keeps awkward doubles bit-exact") {
  Network net = testutil::two_bus();
  std::vector<Branch> br = net.branches();
  br[0].r = 1.0 / 3.0;
  br[0].x = 0.1 + 0.2;
  br[0].tap_ratio = std::nextafter(1.0, 2.0);
  br[0].b_charging = 1e-17;
  Network mod(net.base_mva(), net.buses(), br, net.generators());
  CHECK(parse_case(serialize_case(mod)) == mod);
}

TEST_CASE("case text must start with a CASE header") {
  CHECK_THROWS_WITH_AS(parse_case("BUS\n"), doctest::Contains("CASE header"), ParseError);
  CHECK_THROWS_AS(parse_case(""), ParseError);
}

TEST_CASE("malformed records report their line number") {
  const std::string good = serialize_case(testutil::two_bus());

  SUBCASE("bad bus kind") {
    std::string text = good;
    const auto pos = text.find(" slack ");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 7, " swing ");
    try {
      parse_case(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() > 0);
      CHECK(std::string(e.what()).find("line") == 0);
    }
  }
  SUBCASE("non-boolean service flag") {
    std::string text = "CASE 100\nBRANCH\n1 1 2 0 0.5 0 1 0 0 0 2 1\nBUS\n"
                       "1 100 slack 1 0 0.9 1.1 0 0 0 0\n2 100 pq 1 0 0.9 1.1 0 0 0 0\n";
    CHECK_THROWS_AS(parse_case(text), ParseError);
  }
  SUBCASE("wrong field count") {
    std::string text = "CASE 100\nBUS\n1 100 slack 1 0\n";
    CHECK_THROWS_AS(parse_case(text), ParseError);
  }
  SUBCASE("duplicate section") {
    std::string text = good + "\nBUS\n";
    CHECK_THROWS_AS(parse_case(text), ParseError);
  }
  SUBCASE("non-numeric base") {
    CHECK_THROWS_AS(parse_case("CASE ten\n"), ParseError);
  }
}

TEST_CASE("semantic checks name the offending element") {
  const Network base = testutil::two_bus();

  SUBCASE("branch to unknown bus") {
    std::vector<Branch> br = base.branches();
    br[0].to_bus = 9;
    CHECK_THROWS_WITH_AS(Network(100.0, base.buses(), br, {}),
                         doctest::Contains("unknown bus 9"), SemanticError);
  }
  SUBCASE("duplicate bus id") {
    std::vector<Bus> buses = base.buses();
    buses.push_back(buses[1]);
    CHECK_THROWS_WITH_AS(Network(100.0, buses, base.branches(), {}),
                         doctest::Contains("duplicate bus id 2"), SemanticError);
  }
  SUBCASE("zero reactance") {
    std::vector<Branch> br = base.branches();
    br[0].x = 0.0;
    CHECK_THROWS_WITH_AS(Network(100.0, base.buses(), br, {}),
                         doctest::Contains("zero reactance"), SemanticError);
  }
  SUBCASE("no slack bus") {
    std::vector<Bus> buses = base.buses();
    buses[0].kind = BusKind::pq;
    CHECK_THROWS_WITH_AS(Network(100.0, buses, base.branches(), {}),
                         doctest::Contains("no slack"), SemanticError);
  }
  SUBCASE("two slacks in one island") {
    std::vector<Bus> buses = base.buses();
    buses[1].kind = BusKind::slack;
    CHECK_THROWS_AS(Network(100.0, buses, base.branches(), {}), SemanticError);
  }
  SUBCASE("empty voltage band") {
    std::vector<Bus> buses = base.buses();
    buses[1].v_min = 1.1;
    buses[1].v_max = 0.9;
    CHECK_THROWS_WITH_AS(Network(100.0, buses, base.branches(), {}),
                         doctest::Contains("voltage band"), SemanticError);
  }
  SUBCASE("generator MW outside its limits") {
    Generator g;
    g.id = 1;
    g.bus = 2;
    g.p_out = 60.0;
    g.p_max = 50.0;
    CHECK_THROWS_WITH_AS(Network(100.0, base.buses(), base.branches(), {g}),
                         doctest::Contains("generator 1"), SemanticError);
  }
  SUBCASE("conflicting setpoints on one bus") {
    Generator g1;
    g1.id = 1;
    g1.bus = 2;
    g1.p_max = 50.0;
    g1.v_set = 1.02;
    Generator g2 = g1;
    g2.id = 2;
    g2.v_set = 1.03;
    CHECK_THROWS_WITH_AS(Network(100.0, base.buses(), base.branches(), {g1, g2}),
                         doctest::Contains("bus 2"), SemanticError);
  }
}

TEST_CASE("elements are canonically sorted and indexable") {
  Bus b2;
  b2.id = 2;
  b2.base_kv = 100.0;
  Bus b1;
  b1.id = 1;
  b1.base_kv = 100.0;
  b1.kind = BusKind::slack;
  Branch br;
  br.id = 7;
  br.from_bus = 2;
  br.to_bus = 1;
  br.x = 0.1;
  Network net(100.0, {b2, b1}, {br}, {});
  CHECK(net.buses()[0].id == 1);
  CHECK(net.buses()[1].id == 2);
  CHECK(net.bus_index(2) == 1);
  CHECK(net.branch(7).from_bus == 2);
  CHECK_THROWS_AS(net.bus_index(3), SemanticError);
  CHECK_THROWS_AS(net.branch_index(1), SemanticError);
  CHECK_THROWS_AS(net.generator_index(1), SemanticError);
}

TEST_CASE("14-bus fixture has the expected shape") {
  const Network net = load_case(fixture("case14.grid"));
  CHECK(net.base_mva() == 100.0);
  CHECK(net.buses().size() == 14);
  CHECK(net.branches().size() == 20);
  CHECK(net.generators().size() == 5);
  CHECK(net.bus(9).shunt_b == doctest::Approx(0.19));
  int transformers = 0;
  for (const Branch& br : net.branches()) {
    if (br.is_transformer()) ++transformers;
    if (br.from_bus == 4 && br.to_bus == 7) CHECK(br.tap_ratio == doctest::Approx(0.978));
    if (br.from_bus == 1 && br.to_bus == 2) CHECK_FALSE(br.is_transformer());
  }
  CHECK(transformers == 3);
  CHECK(net.bus(1).kind == BusKind::slack);
}

TEST_CASE("importer output matches the frozen native translation exactly") {
  const RawImportResult imported = load_raw_subset(fixture("case14.raw"));
  const Network expected = load_case(fixture("case14_from_raw.grid"));
  CHECK(imported.net == expected);
  REQUIRE(imported.warnings.size() == 2);
  CHECK(imported.warnings[0].find("isolated bus") != std::string::npos);
  CHECK(imported.warnings[1].find("unsupported record") != std::string::npos);
}

TEST_CASE("importer accepts the minimal two-bus subset") {
  const RawImportResult r = import_raw_subset(minimal_raw(kGoodLoad, kGoodBranch));
  CHECK(r.warnings.empty());
  CHECK(r.net.buses().size() == 2);
  CHECK(r.net.bus(1).kind == BusKind::slack);
  CHECK(r.net.bus(2).p_load == doctest::Approx(30.0));
  CHECK(r.net.branch(1).rate_c == doctest::Approx(120.0));
  REQUIRE(r.net.generators().size() == 1);
  CHECK(r.net.generator(1).p_max == doctest::Approx(100.0));
}

TEST_CASE("importer rejects records outside the subset") {
  SUBCASE("saved-case flag set") {
    std::string text = minimal_raw(kGoodLoad, kGoodBranch);
    text[0] = '1';
    CHECK_THROWS_AS(import_raw_subset(text), ParseError);
  }
  SUBCASE("constant-current load component") {
    const std::string load = "2, '1', 1, 1, 1, 30.0, 10.0, 5.0, 0.0, 0.0, 0.0\n";
    CHECK_THROWS_WITH_AS(import_raw_subset(minimal_raw(load, kGoodBranch)),
                         doctest::Contains("line 7"), ParseError);
  }
  SUBCASE("branch line shunt") {
    const std::string branch =
        "1, 2, '1', 0.01, 0.05, 0.02, 100.0, 0.0, 120.0, 0.5, 0.0, 0.0, 0.0, 1\n";
    CHECK_THROWS_AS(import_raw_subset(minimal_raw(kGoodLoad, branch)), ParseError);
  }
  SUBCASE("load at unknown bus") {
    const std::string load = "9, '1', 1, 1, 1, 30.0, 10.0\n";
    CHECK_THROWS_AS(import_raw_subset(minimal_raw(load, kGoodBranch)), SemanticError);
  }
  SUBCASE("truncated record") {
    const std::string load = "2, '1', 1\n";
    CHECK_THROWS_AS(import_raw_subset(minimal_raw(load, kGoodBranch)), ParseError);
  }
}

TEST_CASE("hop counts radiate from the source set") {
  const Network net = chain5();
  const std::vector<int> hops = bus_hops_from(net, {0});
  CHECK(hops == std::vector<int>{0, 1, 2, 3, 4});
  const std::vector<int> both = bus_hops_from(net, {0, 4});
  CHECK(both == std::vector<int>{0, 1, 2, 1, 0});

  const Network cut = net.with_branch_status(2, false);
  const std::vector<int> part = bus_hops_from(cut, {0});
  CHECK(part == std::vector<int>{0, 1, -1, -1, -1});
}

TEST_CASE("element distance follows the hop metric") {
  const Network net = chain5();
  const auto B = ElementRef::of_branch;
  CHECK(graph_distance(net, B(1), B(1)) == 0);
  CHECK(graph_distance(net, B(1), B(2)) == 0);
  CHECK(graph_distance(net, B(1), B(3)) == 1);
  CHECK(graph_distance(net, B(1), B(4)) == 2);
  CHECK(graph_distance(net, ElementRef::of_generator(1), B(1)) == 3);
  CHECK(graph_distance(net, ElementRef::of_bus(3), B(1)) == 1);

  const Network cut = net.with_branch_status(2, false);
  CHECK(graph_distance(cut, B(1), B(4)) == -1);
  CHECK_THROWS_AS(graph_distance(net, B(99), B(1)), SemanticError);
}

TEST_CASE("element distance is symmetric across a real case") {
  const Network net = load_case(fixture("case14.grid"));
  std::vector<ElementRef> elems;
  for (const Branch& br : net.branches()) elems.push_back(ElementRef::of_branch(br.id));
  for (const Generator& g : net.generators()) elems.push_back(ElementRef::of_generator(g.id));
  for (std::size_t i = 0; i < elems.size(); ++i) {
    for (std::size_t j = i + 1; j < elems.size(); ++j) {
      const int ij = graph_distance(net, elems[i], elems[j]);
      CHECK(ij == graph_distance(net, elems[j], elems[i]));
      CHECK(ij >= 0); // the base case is connected
    }
  }
}

TEST_CASE("islanding check partitions by smallest bus id") {
  const Network net = chain5();
  const IslandingReport whole = islanding_check(net, 4);
  CHECK_FALSE(whole.connected);
  REQUIRE(whole.islands.size() == 2);
  CHECK(whole.islands[0] == std::vector<int>{1, 2, 3, 4});
  CHECK(whole.islands[1] == std::vector<int>{5});

  const Network sixbus = load_case(fixture("sixbus.grid"));
  CHECK(islanding_check(sixbus, 1).connected); // twin pair keeps the path
  const IslandingReport radial = islanding_check(sixbus, 7);
  CHECK_FALSE(radial.connected);
  REQUIRE(radial.islands.size() == 2);
  CHECK(radial.islands[1] == std::vector<int>{6});
}

TEST_CASE("energized flags follow slack connectivity") {
  const Network cut = chain5().with_branch_status(2, false);
  CHECK(energized_buses(cut) == std::vector<bool>{true, true, false, false, false});
  CHECK(energized_buses(chain5()) == std::vector<bool>(5, true));
}

TEST_CASE("file wrappers signal I/O failure") {
  CHECK_THROWS_AS(load_case("/nonexistent/path/case.grid"), std::ios_base::failure);
  CHECK_THROWS_AS(save_case(testutil::two_bus(), "/nonexistent/dir/out.grid"),
                  std::ios_base::failure);
  CHECK_THROWS_AS(load_raw_subset("/nonexistent/path/case.raw"), std::ios_base::failure);
}

} // TEST_SUITE

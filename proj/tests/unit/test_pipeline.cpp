#include "helpers.hpp"

#include <lapnet/pipeline.hpp>
#include <lapnet/ply.hpp>
#include <lapnet/synth.hpp>

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace lapnet;
using namespace testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("lapnet_pipe_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream(path) << text;
}

std::vector<char> read_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<char>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

PreprocessParams small_params()
{
    PreprocessParams p;
    p.cluster_counts = {8, 4};
    return p;
}

} // namespace

TEST_SUITE("preprocess")
{
    TEST_CASE("features and hierarchy shapes")
    {
        const Mesh m = deformed_shape(ShapeFamily::Torus, 150, 1);
        const auto cache = preprocess_mesh(m, small_params());
        CHECK(cache.num_vertices() == m.num_vertices());
        CHECK(cache.eigen_columns.cols() == 16);
        CHECK(cache.eigenvalues.size() == 17);
        CHECK(cache.features().cols() == 22);
        CHECK(cache.features().rows() == m.num_vertices());
        CHECK(cache.mesh_hash == mesh_hash(m));
        CHECK(cache.fingerprint == params_fingerprint(small_params()));
        CHECK_NOTHROW(validate_hierarchy(cache.hierarchy, m.num_vertices()));
        CHECK(cache.hierarchy.levels[0].clusters == 8);
    }

    TEST_CASE("fingerprint tracks every parameter")
    {
        const PreprocessParams base;
        std::set<std::uint64_t> seen{params_fingerprint(base)};
        PreprocessParams p = base;
        p.eigen_count = 12;
        seen.insert(params_fingerprint(p));
        p = base;
        p.cluster_counts = {16, 4};
        seen.insert(params_fingerprint(p));
        p = base;
        p.include_constant = true;
        seen.insert(params_fingerprint(p));
        p = base;
        p.cluster_on_signed = true;
        seen.insert(params_fingerprint(p));
        p = base;
        p.seed = 2;
        seen.insert(params_fingerprint(p));
        p = base;
        p.kmeans.restarts = 3;
        seen.insert(params_fingerprint(p));
        CHECK(seen.size() == 7);
    }

    TEST_CASE("deterministic for a fixed seed")
    {
        const Mesh m = deformed_shape(ShapeFamily::Sphere, 120, 2);
        const auto a = preprocess_mesh(m, small_params());
        const auto b = preprocess_mesh(m, small_params());
        CHECK(a.features() == b.features());
        CHECK(a.hierarchy.levels[1].mask == b.hierarchy.levels[1].mask);
    }
}

TEST_SUITE("feature cache")
{
    TEST_CASE("round trip is exact")
    {
        TempDir dir;
        const Mesh m = deformed_shape(ShapeFamily::Dumbbell, 150, 3);
        const auto cache = preprocess_mesh(m, small_params());
        const fs::path path = dir.path / "m.lpf";
        save_feature_cache(path, cache);
        const auto back = load_feature_cache(path);
        CHECK(back.mesh_hash == cache.mesh_hash);
        CHECK(back.fingerprint == cache.fingerprint);
        CHECK(back.features() == cache.features());
        CHECK(back.eigenvalues == cache.eigenvalues);
        for (int l = 0; l < 2; ++l) {
            CHECK(back.hierarchy.levels[l].clusters == cache.hierarchy.levels[l].clusters);
            CHECK(back.hierarchy.levels[l].mask == cache.hierarchy.levels[l].mask);
        }
        CHECK(cache_is_current(path, cache.mesh_hash, cache.fingerprint));
        CHECK(!cache_is_current(path, cache.mesh_hash + 1, cache.fingerprint));
        CHECK(!cache_is_current(path, cache.mesh_hash, cache.fingerprint + 1));
        CHECK(!cache_is_current(dir.path / "none.lpf", cache.mesh_hash, cache.fingerprint));
    }

    TEST_CASE("every damaged variant is rejected")
    {
        TempDir dir;
        const auto cache = preprocess_mesh(make_icosphere(2), small_params());
        const fs::path path = dir.path / "c.lpf";
        save_feature_cache(path, cache);
        const auto good = read_bytes(path);
        CHECK_THROWS_AS(load_feature_cache(dir.path / "missing.lpf"), CacheError);
        for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{20}, good.size() / 2, good.size() - 1}) {
            auto bytes = good;
            bytes.resize(cut);
            write_bytes(path, bytes);
            CAPTURE(cut);
            CHECK_THROWS_AS(load_feature_cache(path), CacheError);
            CHECK(!cache_is_current(path, cache.mesh_hash, cache.fingerprint));
        }
        for (std::size_t pos : {std::size_t{2}, std::size_t{9}, good.size() / 3, good.size() - 3}) {
            auto bytes = good;
            bytes[pos] ^= 0x40;
            write_bytes(path, bytes);
            CAPTURE(pos);
            CHECK_THROWS_AS(load_feature_cache(path), CacheError);
        }
        write_bytes(path, good);
        CHECK_NOTHROW(load_feature_cache(path));
    }
}

TEST_SUITE("labels")
{
    TEST_CASE("manifest parse and round trip")
    {
        TempDir dir;
        write_text(dir.path / "m.txt", "# header\nchair_01 0\n\n  table_02   3  # trailing\n");
        const auto entries = load_manifest(dir.path / "m.txt");
        REQUIRE(entries.size() == 2);
        CHECK(entries[1].mesh_id == "table_02");
        CHECK(entries[1].category == 3);
        save_manifest(dir.path / "n.txt", entries);
        const auto back = load_manifest(dir.path / "n.txt");
        CHECK(back.size() == 2);
        CHECK(back[0].mesh_id == "chair_01");
    }

    TEST_CASE("manifest errors carry line numbers")
    {
        TempDir dir;
        const auto line_of = [&](const std::string& text) -> std::size_t {
            write_text(dir.path / "bad.txt", text);
            try {
                load_manifest(dir.path / "bad.txt");
            } catch (const ParseError& e) {
                return e.line();
            }
            return 0;
        };
        CHECK(line_of("a 0\nb\n") == 2);
        CHECK(line_of("a 0\nb 1 2\n") == 2);
        CHECK(line_of("a 0\n\na 1\n") == 3);
        CHECK(line_of("a -1\n") == 1);
        CHECK(line_of("a x\n") == 1);
    }

    TEST_CASE("vertex labels")
    {
        TempDir dir;
        save_vertex_labels(dir.path / "l.seg", {0, 2, 1, 1});
        CHECK(load_vertex_labels(dir.path / "l.seg") == std::vector<int>{0, 2, 1, 1});
        write_text(dir.path / "bad.seg", "0\n1\n1.5\n");
        try {
            load_vertex_labels(dir.path / "bad.seg");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
        write_text(dir.path / "bad.seg", "0\n-2\n");
        CHECK_THROWS_AS(load_vertex_labels(dir.path / "bad.seg"), ParseError);
        write_text(dir.path / "bad.seg", "0 1\n");
        CHECK_THROWS_AS(load_vertex_labels(dir.path / "bad.seg"), ParseError);
        CHECK_THROWS_AS(load_vertex_labels(dir.path / "missing.seg"), Error);
    }
}

TEST_SUITE("synthetic")
{
    TEST_CASE("every family is a closed sphere-or-torus manifold near the target size")
    {
        for (ShapeFamily f : {ShapeFamily::Sphere, ShapeFamily::Torus, ShapeFamily::Cylinder, ShapeFamily::Dumbbell}) {
            SyntheticSpec spec;
            spec.family = f;
            spec.resolution = 2;
            spec.deformation_seed = 5;
            const Mesh m = generate_synthetic(spec).mesh;
            CAPTURE(family_name(f));
            CHECK(is_closed_manifold(m));
            CHECK(euler_characteristic(m) == (f == ShapeFamily::Torus ? 0 : 2));
            CHECK(std::abs(m.num_vertices() - 162) <= 20);
            CHECK_NOTHROW(validate_mesh(m));
        }
        CHECK(generate_synthetic({ShapeFamily::Sphere, 3, std::nullopt, 0, LabelRule::None}).mesh.num_vertices() == 642);
    }

    TEST_CASE("family names round trip")
    {
        for (ShapeFamily f : {ShapeFamily::Sphere, ShapeFamily::Torus, ShapeFamily::Cylinder, ShapeFamily::Dumbbell}) {
            CHECK(parse_family(family_name(f)) == f);
        }
        CHECK_THROWS_AS(parse_family("cube"), ArgumentError);
    }

    TEST_CASE("dumbbell labels")
    {
        SyntheticSpec spec;
        spec.family = ShapeFamily::Dumbbell;
        spec.target_vertices = 200;
        spec.labels = LabelRule::DumbbellThreePart;
        const auto three = generate_synthetic(spec);
        REQUIRE(three.labels.size() == three.mesh.vertices.size());
        const double neck = 1.6 - std::sqrt(1.0 - 0.35 * 0.35);
        std::set<int> seen;
        for (std::size_t i = 0; i < three.labels.size(); ++i) {
            const double z = three.mesh.vertices[i].z();
            const int expected = std::abs(z) < neck ? 2 : (z < 0 ? 0 : 1);
            CHECK(three.labels[i] == expected);
            seen.insert(three.labels[i]);
        }
        CHECK(seen.size() == 3);
        spec.labels = LabelRule::DumbbellTwoPart;
        const auto two = generate_synthetic(spec);
        for (std::size_t i = 0; i < two.labels.size(); ++i) {
            CHECK(two.labels[i] == (two.mesh.vertices[i].z() < 0 ? 0 : 1));
        }
    }

    TEST_CASE("deformation is seeded")
    {
        SyntheticSpec spec;
        spec.family = ShapeFamily::Cylinder;
        spec.deformation_seed = 4;
        const Mesh a = generate_synthetic(spec).mesh;
        const Mesh b = generate_synthetic(spec).mesh;
        spec.deformation_seed = 5;
        const Mesh c = generate_synthetic(spec).mesh;
        CHECK(mesh_hash(a) == mesh_hash(b));
        CHECK(mesh_hash(a) != mesh_hash(c));
        CHECK(a.faces == c.faces);
    }

    TEST_CASE("remesh keeps the vertex count and topology but changes connectivity")
    {
        const Mesh m = deformed_shape(ShapeFamily::Dumbbell, 200, 6);
        const Mesh r = remesh(m, 3);
        CHECK(r.num_vertices() == m.num_vertices());
        CHECK(is_closed_manifold(r));
        CHECK(euler_characteristic(r) == 2);
        CHECK(r.faces != m.faces);
        CHECK_NOTHROW(validate_mesh(r));
        const Mesh smaller = decimate(m, 150, 1);
        CHECK(smaller.num_vertices() == 150);
        CHECK(is_closed_manifold(smaller));
        CHECK_THROWS_AS(decimate(make_icosphere(0), 3, 1), Error);
    }

    TEST_CASE("nearest vertices")
    {
        const std::vector<Vec3> to{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 0, 0)};
        const std::vector<Vec3> from{Vec3(0.9, 0, 0), Vec3(-1, 0, 0), Vec3(0.5, 0, 0)};
        CHECK(nearest_vertices(from, to) == std::vector<int>{1, 0, 0});
    }
}

TEST_SUITE("ply")
{
    TEST_CASE("palette")
    {
        CHECK(label_color(0) == Rgb{230, 25, 75});
        CHECK(label_color(3) == Rgb{0, 130, 200});
        CHECK(label_color(19) == Rgb{128, 128, 128});
        CHECK(label_color(21) == label_color(1));
        CHECK_THROWS_AS(label_color(-1), ArgumentError);
    }

    TEST_CASE("ascii layout")
    {
        std::ostringstream out;
        write_ply(out, equilateral_triangle(), {0, 1, 2});
        std::istringstream in(out.str());
        std::string line;
        std::vector<std::string> lines;
        while (std::getline(in, line)) {
            lines.push_back(line);
        }
        CHECK(lines.front() == "ply");
        CHECK(std::find(lines.begin(), lines.end(), "element vertex 3") != lines.end());
        CHECK(std::find(lines.begin(), lines.end(), "element face 1") != lines.end());
        const auto header_end = std::find(lines.begin(), lines.end(), "end_header");
        REQUIRE(header_end != lines.end());
        std::istringstream v0(*(header_end + 1));
        double x, y, z;
        int r, g, b;
        v0 >> x >> y >> z >> r >> g >> b;
        CHECK(r == 230);
        CHECK(g == 25);
        CHECK(b == 75);
        CHECK(*(header_end + 4) == "3 0 1 2");
        CHECK_THROWS_AS(write_ply(out, equilateral_triangle(), {0, 1}), ArgumentError);
    }
}

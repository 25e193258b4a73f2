#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CmdResult run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path out_file = workdir / "stdout.txt";
    const fs::path err_file = workdir / "stderr.txt";
    const std::string cmd = "cd " + workdir.string() + " && " + MCDC_CLI_PATH + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WEXITSTATUS(status);
    std::ifstream os(out_file), es(err_file);
    r.out.assign((std::istreambuf_iterator<char>(os)), std::istreambuf_iterator<char>());
    r.err.assign((std::istreambuf_iterator<char>(es)), std::istreambuf_iterator<char>());
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

size_t count_lines(const std::string& text) {
    size_t n = 0;
    for (char c : text) n += c == '\n' ? 1 : 0;
    return n;
}

struct Pgm {
    size_t width = 0, height = 0;
    std::vector<unsigned char> pixels;
};

Pgm read_pgm(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::string magic;
    Pgm img;
    int maxval = 0;
    is >> magic >> img.width >> img.height >> maxval;
    REQUIRE(magic == "P5");
    REQUIRE(maxval == 255);
    is.get(); // the single whitespace after the header
    img.pixels.resize(img.width * img.height);
    is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    return img;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("mcdc_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const std::string kBlobArgs =
    "--dataset blobs --blob-k 3 --blob-dim 6 --blob-sep 14 --blob-n 40 ";

} // namespace

TEST_CASE("train writes one CSV row per epoch plus artifacts") {
    TempDir tmp("train");
    const auto r = run_cli("train --variant mcdc " + kBlobArgs +
                               "--epochs 4 --batch 32 --seed 5 --out run",
                           tmp.path);
    REQUIRE(r.exit_code == 0);
    const std::string csv = slurp(tmp.path / "run" / "metrics.csv");
    CHECK(csv.rfind("epoch,recon,adversarial,mix_consistency,total,discriminator\n", 0) == 0);
    CHECK(count_lines(csv) == 5); // header + 4 epochs
    CHECK(fs::exists(tmp.path / "run" / "checkpoint.mcdc"));
    const std::string manifest = slurp(tmp.path / "run" / "manifest.txt");
    CHECK(manifest.find("variant = mcdc") != std::string::npos);
    CHECK(manifest.find("epochs = 4") != std::string::npos);
    CHECK(manifest.find("seed = 5") != std::string::npos);
}

TEST_CASE("missing variant is a config error unless the config file provides it") {
    TempDir tmp("variant");
    const auto fail = run_cli("train " + kBlobArgs + "--epochs 1 --out run", tmp.path);
    CHECK(fail.exit_code == 2);

    {
        std::ofstream cfg(tmp.path / "run.cfg");
        cfg << "# preset\nvariant = acai\nepochs = 3\n";
    }
    const auto ok = run_cli("train --config run.cfg " + kBlobArgs + "--out run2", tmp.path);
    REQUIRE(ok.exit_code == 0);
    CHECK(count_lines(slurp(tmp.path / "run2" / "metrics.csv")) == 4); // header + 3

    // command-line flag outranks the config file
    const auto override_run =
        run_cli("train --config run.cfg " + kBlobArgs + "--epochs 2 --out run3", tmp.path);
    REQUIRE(override_run.exit_code == 0);
    CHECK(count_lines(slurp(tmp.path / "run3" / "metrics.csv")) == 3);
    CHECK(slurp(tmp.path / "run3" / "manifest.txt").find("epochs = 2") != std::string::npos);
}

TEST_CASE("identical train commands produce byte-identical CSV and checkpoint") {
    TempDir tmp("determinism");
    const std::string args = "train --variant mcdc " + kBlobArgs + "--epochs 3 --batch 32 --seed 11";
    REQUIRE(run_cli(args + " --out a", tmp.path).exit_code == 0);
    REQUIRE(run_cli(args + " --out b", tmp.path).exit_code == 0);
    CHECK(slurp(tmp.path / "a" / "metrics.csv") == slurp(tmp.path / "b" / "metrics.csv"));
    CHECK(slurp(tmp.path / "a" / "checkpoint.mcdc") == slurp(tmp.path / "b" / "checkpoint.mcdc"));
}

TEST_CASE("eval prints the metric line and honors defaults") {
    TempDir tmp("eval");
    REQUIRE(run_cli("train --variant baseline " + kBlobArgs + "--epochs 0 --seed 3 --out run",
                    tmp.path)
                .exit_code == 0);
    // huge separation + untrained encoder: still a perfect embedding
    const auto r = run_cli("eval --checkpoint run/checkpoint.mcdc --dataset blobs --blob-k 3 "
                           "--blob-dim 6 --blob-sep 2000 --blob-n 40 --seed 3 "
                           "--kmeans-restarts 25 --out ev",
                           tmp.path);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.rfind("acc=", 0) == 0);
    CHECK(r.out.find(" nmi=") != std::string::npos);
    CHECK(r.out.find(" inertia=") != std::string::npos);
    CHECK(r.out.rfind("acc=1 ", 0) == 0); // perfect embedding
    const std::string metrics = slurp(tmp.path / "ev" / "eval_metrics.txt");
    CHECK(metrics.find("acc = 1") != std::string::npos);
    CHECK(metrics.find("nmi = 1") != std::string::npos);
    // k defaulted to the dataset class count
    CHECK(metrics.find("k = 3") != std::string::npos);
    CHECK(slurp(tmp.path / "ev" / "manifest.txt").find("kmeans_restarts = 25") != std::string::npos);

    const auto missing = run_cli("eval --checkpoint nope.mcdc --dataset blobs --out ev2", tmp.path);
    CHECK(missing.exit_code == 3);
}

TEST_CASE("analyze requires a split and writes both CSVs with clamped cutoff") {
    TempDir tmp("analyze");
    REQUIRE(run_cli("train --variant baseline " + kBlobArgs + "--epochs 1 --seed 4 --out run",
                    tmp.path)
                .exit_code == 0);

    const auto no_split = run_cli("analyze --checkpoint run/checkpoint.mcdc --dataset blobs "
                                  "--blob-k 3 --blob-dim 6 --out an",
                                  tmp.path);
    CHECK(no_split.exit_code == 2);

    const auto r = run_cli("analyze --checkpoint run/checkpoint.mcdc " + kBlobArgs +
                               "--split train --seed 4 --out an",
                           tmp.path);
    REQUIRE(r.exit_code == 0);
    // latent dimensionality is 2, so the default cutoff 40 clamps to 2
    CHECK(r.err.find("clamped") != std::string::npos);
    const std::string profile = slurp(tmp.path / "an" / "profile.csv");
    CHECK(profile.rfind("component_index,mean_share,std_share\n", 0) == 0);
    CHECK(count_lines(profile) == 3); // header + 2 components
    const std::string proj = slurp(tmp.path / "an" / "projection.csv");
    CHECK(proj.rfind("x,y,label\n", 0) == 0);
    CHECK(count_lines(proj) == 121); // header + 3*40 rows
}

TEST_CASE("interpolate writes the grid and the recon-check column matches") {
    TempDir tmp("interp");
    REQUIRE(run_cli("train --variant mcdc --dataset digits2 --per-class-cap 20 "
                    "--epochs 1 --batch 16 --seed 6 --out run",
                    tmp.path)
                .exit_code == 0);
    const auto r = run_cli("interpolate --checkpoint run/checkpoint.mcdc --dataset digits2 "
                           "--per-class-cap 20 --pairs 3 --steps 5 --seed 6 --recon-check --out ip",
                           tmp.path);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.rfind("side_score_alpha_0.25=", 0) == 0);

    const Pgm grid = read_pgm(tmp.path / "ip" / "grid.pgm");
    CHECK(grid.width == 5 * 32 + 4); // 5 alpha steps of 32px + separators
    CHECK(grid.height == 3 * 32 + 2);

    const Pgm recon = read_pgm(tmp.path / "ip" / "recon_check.pgm");
    REQUIRE(recon.width == 32);
    REQUIRE(recon.height == 3 * 32 + 2);
    // first grid column (alpha = 0) equals the plain reconstruction column
    for (size_t y = 0; y < grid.height; ++y)
        for (size_t x = 0; x < 32; ++x)
            REQUIRE(grid.pixels[y * grid.width + x] == recon.pixels[y * recon.width + x]);
}

TEST_CASE("mnist dataset without files on disk is a data error") {
    TempDir tmp("nodata");
    const auto r = run_cli("train --variant mcdc --dataset mnist2 --epochs 1 --out run "
                           "--data-dir ./empty",
                           tmp.path);
    CHECK(r.exit_code == 3);
}

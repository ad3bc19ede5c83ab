// End-to-end checks of the command-line tool: every subcommand is spawned on
// generated scene files and its outputs are read back and verified.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flowdepth/flow.hpp"
#include "flowdepth/kitti_io.hpp"
#include "flowdepth/metrics.hpp"
#include "flowdepth/synth.hpp"

using namespace flowdepth;

namespace {

const std::string kCli = FLOWDEPTH_CLI_PATH;
int g_failures = 0;

void expect(bool ok, const std::string& what) {
    std::printf("[%s] %s\n", ok ? "ok" : "FAILED", what.c_str());
    if (!ok)
        ++g_failures;
}

int run(const std::string& args) {
    const std::string command = kCli + " " + args + " > /dev/null 2>&1";
    return std::system(command.c_str());
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return buffer.str();
}

// Parses "key: value"-ish report lines of the losses/pipeline commands.
double report_value(const std::string& text, const std::string& key) {
    const std::size_t pos = text.find(key + ":");
    if (pos == std::string::npos)
        return std::nan("");
    return std::atof(text.c_str() + pos + key.size() + 1);
}

} // namespace

int main() {
    const auto dir = std::filesystem::temp_directory_path() / "flowdepth_cli_integration";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    // Scene with one moving object.
    const std::string spec_path = (dir / "scene.txt").string();
    {
        std::ofstream spec(spec_path);
        spec << "width: 256\nheight: 128\nfx: 100\nfy: 100\ncx: 127.5\ncy: 63.5\n";
        spec << "seed: 7\ntexture: checker\nbackground_depth: 2.0\n";
        spec << "ego_trans: -0.05 0 0\n";
        spec << "object: rect 60 14 160 114 1.2\n";
        spec << "object_trans: 0.1 0 0\n";
    }
    const std::string gen = (dir / "gen").string();
    expect(run("gen --spec " + spec_path + " --out " + gen) == 0, "gen exits 0");
    for (const char* name : {"image_t.png", "image_t1.png", "depth_t.png", "depth_t1.png",
                             "flow_gt.png", "labels_gt.png", "poses_gt.txt", "scene_spec.txt",
                             "config.txt"})
        expect(std::filesystem::exists(dir / "gen" / name), std::string("gen wrote ") + name);

    // Static scene for the degenerate cases.
    const std::string static_spec_path = (dir / "static.txt").string();
    {
        std::ofstream spec(static_spec_path);
        spec << "width: 128\nheight: 64\nfx: 100\nfy: 100\ncx: 63.5\ncy: 31.5\n";
        spec << "seed: 9\ntexture: noise\nbackground_depth: 2.0\n";
    }
    const std::string sgen = (dir / "static_gen").string();
    expect(run("gen --spec " + static_spec_path + " --out " + sgen) == 0, "static gen exits 0");
    expect(slurp(dir / "static_gen" / "image_t.png") == slurp(dir / "static_gen" / "image_t1.png"),
           "static world renders identical frames");
    {
        const FlowField zero_flow = read_flow_png(sgen + "/flow_gt.png");
        bool all_zero = true;
        for (std::size_t i = 0; i < zero_flow.size(); ++i)
            all_zero = all_zero && zero_flow.valid[i] && zero_flow.du[i] == 0.0 &&
                       zero_flow.dv[i] == 0.0;
        expect(all_zero, "static world writes an exactly-zero flow PNG");
    }

    // Ego-motion-only scene for pose recovery through the CLI.
    const std::string ego_spec_path = (dir / "ego.txt").string();
    {
        std::ofstream spec(ego_spec_path);
        spec << "width: 256\nheight: 128\nfx: 100\nfy: 100\ncx: 127.5\ncy: 63.5\n";
        spec << "seed: 21\ntexture: noise\nbackground_depth: 2.0\n";
        spec << "ego_rot_axis: 0 1 0\nego_rot_deg: 0.6\nego_trans: 0.04 -0.01 0.02\n";
    }
    const std::string egen = (dir / "ego_gen").string();
    expect(run("gen --spec " + ego_spec_path + " --out " + egen) == 0, "ego gen exits 0");

    // segment: moving scene has k=1 with high IoU, static flow has k=0.
    const std::string seg = (dir / "seg").string();
    expect(run("segment --flow " + gen + "/flow_gt.png --gt-labels " + gen +
               "/labels_gt.png --out " + seg) == 0,
           "segment exits 0");
    {
        const std::string summary = slurp(dir / "seg" / "summary.txt");
        expect(summary.find("k=1") == 0, "segment reports k=1");
        const double overlap = report_value(summary, "IoU region 1");
        expect(overlap >= 0.95, "segment IoU >= 0.95 (" + std::to_string(overlap) + ")");
    }
    const std::string sseg = (dir / "static_seg").string();
    expect(run("segment --flow " + sgen + "/flow_gt.png --out " + sseg) == 0,
           "static segment exits 0");
    expect(slurp(dir / "static_seg" / "summary.txt").find("k=0") == 0,
           "uniform flow reports k=0");

    // losses: ground-truth inputs give L_flow ~ 0 and additive L_ph.
    const std::string losses = (dir / "losses").string();
    expect(run("losses --image-t " + gen + "/image_t.png --image-t1 " + gen +
               "/image_t1.png --depth-t " + gen + "/depth_t.png --depth-t1 " + gen +
               "/depth_t1.png --poses " + gen + "/poses_gt.txt --labels " + gen +
               "/labels_gt.png --flow " + gen + "/flow_gt.png --fx 100 --fy 100 --cx 127.5 "
               "--cy 63.5 --out " + losses) == 0,
           "losses exits 0");
    {
        const std::string report = slurp(dir / "losses" / "report.txt");
        // Inputs pass through the 16-bit codecs, so the floor is set by the
        // 1/128 px flow and 1/512 m depth quantization, not by arithmetic.
        const double l_flow = report_value(report, "L_flow");
        expect(l_flow >= 0.0 && l_flow < 5e-3,
               "ground-truth flow loss is at the quantization floor (" + std::to_string(l_flow) +
                   ")");
        const double l_ph = report_value(report, "L_ph");
        const double parts =
            report_value(report, "L_ph_s") + report_value(report, "L_ph_m1");
        expect(std::abs(l_ph - parts) < 1e-9, "L_ph equals the sum of its region terms");
        const double l_depth = report_value(report, "L_depth");
        expect(std::abs(l_depth - (l_ph + 0.1 * l_flow)) < 1e-12,
               "L_depth = L_ph + lambda L_flow");
    }

    // losses on identical frames at the identity pose: all-zero report.
    const std::string identity_pose = (dir / "identity_pose.txt").string();
    {
        std::ofstream file(identity_pose);
        file << "region: 0\npose: 1 0 0 0 0 0 0\n";
    }
    const std::string zero_losses = (dir / "zero_losses").string();
    expect(run("losses --image-t " + sgen + "/image_t.png --image-t1 " + sgen +
               "/image_t1.png --depth-t " + sgen + "/depth_t.png --depth-t1 " + sgen +
               "/depth_t1.png --poses " + identity_pose + " --fx 100 --fy 100 --cx 63.5 "
               "--cy 31.5 --out " + zero_losses) == 0,
           "identity losses exits 0");
    {
        const std::string report = slurp(dir / "zero_losses" / "report.txt");
        expect(report_value(report, "L_ph") < 1e-9, "identical frames give a zero report");
    }

    // eval: perfect prediction then fixed offsets.
    const std::string eval_perfect = (dir / "eval_perfect").string();
    expect(run("eval --pred-depth " + gen + "/depth_t.png --gt-depth " + gen +
               "/depth_t.png --pred-flow " + gen + "/flow_gt.png --gt-flow " + gen +
               "/flow_gt.png --out " + eval_perfect) == 0,
           "eval exits 0");
    {
        std::ifstream csv(dir / "eval_perfect" / "metrics.csv");
        std::string header, depth_row, flow_header, flow_row;
        std::getline(csv, header);
        std::getline(csv, depth_row);
        std::getline(csv, flow_header);
        std::getline(csv, flow_row);
        expect(header == "AbsRel,SqRel,RMS,RMSlog,d1,d2,d3", "depth CSV column order");
        expect(depth_row.find("0.000000,0.000000,0.000000,0.000000,1.000000,1.000000,"
                              "1.000000") == 0,
               "perfect depth row is zero errors and unit deltas");
        expect(flow_header == "EPE,F1-all", "flow CSV column order");
        expect(flow_row.find("0.000000,0.000000") == 0, "perfect flow row is zero");
    }

    {
        // 1.1x depth without scaling -> AbsRel 0.1; (3,4) flow offset -> EPE 5.
        DepthMap gt = read_depth_png(gen + "/depth_t.png");
        DepthMap scaled = gt;
        for (double& d : scaled.depth)
            d *= 1.1;
        write_depth_png(scaled, (dir / "depth_1p1.png").string());
        FlowField flow = read_flow_png(gen + "/flow_gt.png");
        for (std::size_t i = 0; i < flow.size(); ++i) {
            flow.du[i] += 3.0;
            flow.dv[i] += 4.0;
        }
        write_flow_png(flow, (dir / "flow_off.png").string());
    }
    const std::string eval_off = (dir / "eval_off").string();
    expect(run("eval --pred-depth " + (dir / "depth_1p1.png").string() + " --gt-depth " + gen +
               "/depth_t.png --no-median-scaling --pred-flow " +
               (dir / "flow_off.png").string() + " --gt-flow " + gen + "/flow_gt.png --out " +
               eval_off) == 0,
           "offset eval exits 0");
    {
        std::ifstream csv(dir / "eval_off" / "metrics.csv");
        std::string line;
        std::getline(csv, line); // depth header
        std::getline(csv, line);
        expect(line.find("0.1000") == 0, "AbsRel 0.100 for the 1.1x prediction");
        std::getline(csv, line); // flow header
        std::getline(csv, line);
        expect(line.find("5.000") == 0, "EPE 5.000 for the (3,4) offset");
    }

    // optimize: static-background scene, identity init.
    const std::string opt = (dir / "opt").string();
    expect(run("optimize --image-t " + sgen + "/image_t.png --image-t1 " + sgen +
               "/image_t1.png --depth-t " + sgen + "/depth_t.png --depth-t1 " + sgen +
               "/depth_t1.png --fx 100 --fy 100 --cx 63.5 --cy 31.5 --out " + opt) == 0,
           "optimize exits 0");
    {
        // The static scene's true pose is the identity, so the estimate must
        // stay at it and the trace must be non-increasing.
        std::ifstream pose_file(dir / "opt" / "pose.txt");
        std::string line, pose_line;
        while (std::getline(pose_file, line))
            if (line.rfind("pose:", 0) == 0)
                pose_line = line;
        std::istringstream tokens(pose_line.substr(5));
        double qw, qx, qy, qz, tx, ty, tz;
        tokens >> qw >> qx >> qy >> qz >> tx >> ty >> tz;
        expect(std::abs(std::abs(qw) - 1.0) < 1e-9 && std::hypot(tx, std::hypot(ty, tz)) < 1e-9,
               "identical-frame optimize returns the identity");

        std::ifstream trace(dir / "opt" / "trace.csv");
        std::getline(trace, line);
        expect(line == "iteration,loss", "trace CSV header");
        double previous = std::numeric_limits<double>::infinity();
        bool monotone = true;
        while (std::getline(trace, line)) {
            const double value = std::atof(line.c_str() + line.find(',') + 1);
            monotone = monotone && value <= previous;
            previous = value;
        }
        expect(monotone, "trace losses are non-increasing");
    }

    // optimize recovers the ego motion from identity init through the CLI.
    const std::string ego_opt = (dir / "ego_opt").string();
    expect(run("optimize --image-t " + egen + "/image_t.png --image-t1 " + egen +
               "/image_t1.png --depth-t " + egen + "/depth_t.png --depth-t1 " + egen +
               "/depth_t1.png --fx 100 --fy 100 --cx 127.5 --cy 63.5 --out " + ego_opt) == 0,
           "ego optimize exits 0");
    {
        std::ifstream pose_file(dir / "ego_opt" / "pose.txt");
        std::string line, pose_line;
        while (std::getline(pose_file, line))
            if (line.rfind("pose:", 0) == 0)
                pose_line = line;
        std::istringstream tokens(pose_line.substr(5));
        double qw, qx, qy, qz, tx, ty, tz;
        tokens >> qw >> qx >> qy >> qz >> tx >> ty >> tz;
        // True rotation: 0.6 deg about +y; true translation (0.04, -0.01, 0.02).
        const double half = 0.6 * 3.14159265358979323846 / 360.0;
        const double rot_err =
            2.0 * std::acos(std::min(1.0, std::abs(qw * std::cos(half) + qy * std::sin(half))));
        const double trans_err =
            std::sqrt((tx - 0.04) * (tx - 0.04) + (ty + 0.01) * (ty + 0.01) +
                      (tz - 0.02) * (tz - 0.02));
        expect(rot_err < 0.1 * 3.14159265358979323846 / 180.0 && trans_err < 1e-3,
               "CLI optimize recovers the pose (" + std::to_string(trans_err) + " m)");
    }

    // pipeline on the two-region scene: k=1 and accurate composite flow.
    const std::string pipe = (dir / "pipe").string();
    expect(run("pipeline --image-t " + gen + "/image_t.png --image-t1 " + gen +
               "/image_t1.png --depth-t " + gen + "/depth_t.png --depth-t1 " + gen +
               "/depth_t1.png --flow " + gen + "/flow_gt.png --gt-flow " + gen +
               "/flow_gt.png --fx 100 --fy 100 --cx 127.5 --cy 63.5 --out " + pipe) == 0,
           "pipeline exits 0");
    {
        const FlowField composite = read_flow_png(pipe + "/flow_composite.png");
        const FlowField gt_flow = read_flow_png(gen + "/flow_gt.png");
        const FlowMetrics metrics = flow_metrics(composite, gt_flow);
        expect(metrics.epe < 0.5,
               "composite flow EPE vs ground truth < 0.5 px (" + std::to_string(metrics.epe) +
                   ")");
        const std::string report = slurp(dir / "pipe" / "report.txt");
        expect(report.find("L_ph_m1") != std::string::npos, "pipeline report has a motion term");

        // Segmented L_ph is no worse than the unsegmented single-pose run.
        const std::string ego_pose = (dir / "ego_pose.txt").string();
        {
            std::ofstream file(ego_pose);
            file << "region: 0\npose: 1 0 0 0 -0.05 0 0\n";
        }
        const std::string single = (dir / "pipe_single").string();
        expect(run("losses --image-t " + gen + "/image_t.png --image-t1 " + gen +
                   "/image_t1.png --depth-t " + gen + "/depth_t.png --depth-t1 " + gen +
                   "/depth_t1.png --poses " + ego_pose + " --fx 100 --fy 100 "
                   "--cx 127.5 --cy 63.5 --out " + single) == 0,
               "single-pose losses exits 0");
        const double segmented = report_value(report, "L_ph");
        const double unsegmented = report_value(slurp(dir / "pipe_single" / "report.txt"), "L_ph");
        expect(segmented <= unsegmented, "segmented L_ph <= unsegmented single-pose L_ph (" +
                                             std::to_string(segmented) + " vs " +
                                             std::to_string(unsegmented) + ")");
    }

    // pipeline on the static scene degenerates to a single region.
    const std::string static_pipe = (dir / "static_pipe").string();
    expect(run("pipeline --image-t " + sgen + "/image_t.png --image-t1 " + sgen +
               "/image_t1.png --depth-t " + sgen + "/depth_t.png --depth-t1 " + sgen +
               "/depth_t1.png --flow " + sgen + "/flow_gt.png --fx 100 --fy 100 --cx 63.5 "
               "--cy 31.5 --out " + static_pipe) == 0,
           "static pipeline exits 0");
    expect(slurp(dir / "static_pipe" / "report.txt").find("L_ph_m") == std::string::npos,
           "static pipeline has no motion terms");

    // Failures exit nonzero.
    expect(run("segment --flow " + (dir / "missing.png").string() + " --out " +
               (dir / "x").string()) != 0,
           "missing input exits nonzero");
    expect(run("gen --spec " + gen + "/config.txt --out " + (dir / "y").string()) != 0,
           "malformed spec exits nonzero");

    if (g_failures) {
        std::printf("%d CLI check(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all CLI checks passed\n");
    return 0;
}

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "thermo_opt.hpp"

using namespace thermo_opt;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

ErrorCode read_error(const std::string& csv) {
  std::istringstream in(csv);
  try {
    read_schedule_csv(in);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::IoError;
}

EvaluationRecord small_record() {
  static const ForwardModel model(generate_demo_disk_blade(1), MaterialProperties{}, 4, 400.0);
  OcpProblem p;
  p.steps = 4;
  p.t_f = 400.0;
  p.omega_rate_limit = 1.0;
  return evaluate(model, p, initial_guess(GuessKind::LinearRamp, p), true);
}

}  // namespace

TEST(ControlsCsv, LayoutAndRestRow) {
  const EvaluationRecord rec = small_record();
  std::ostringstream out;
  write_controls_csv(out, rec, 15.0);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "step,time_s,T_e_C,omega_Hz,max_sigma_v_MPa,max_T_C,argmax_node");
  EXPECT_EQ(lines[1].substr(0, 12), "0,0,15,0,0,0");
  EXPECT_EQ(lines[4].substr(0, 13), "3,300,562.5,4");
}

TEST(ControlsCsv, RoundTripIsExact) {
  const EvaluationRecord rec = small_record();
  std::stringstream buf;
  write_controls_csv(buf, rec);
  const ControlSchedule back = read_schedule_csv(buf);
  EXPECT_EQ(back.T_e, rec.schedule.T_e);
  EXPECT_EQ(back.omega_hz, rec.schedule.omega_hz);
  EXPECT_EQ(back.t_f, rec.schedule.t_f);
}

TEST(ScheduleCsv, MinimalColumnsInAnyOrder) {
  const ControlSchedule s = [] {
    std::istringstream in("omega_Hz,step,T_e_C,time_s\n1.5,1,100,60\n3,2,200,120\n");
    return read_schedule_csv(in);
  }();
  EXPECT_EQ(s.steps(), 2u);
  EXPECT_EQ(s.t_f, 120.0);
  EXPECT_EQ(s.T_e[1], 200.0);
  EXPECT_EQ(s.omega_hz[0], 1.5);
}

TEST(ScheduleCsv, Errors) {
  EXPECT_EQ(read_error(""), ErrorCode::MalformedFile);
  EXPECT_EQ(read_error("step,time_s,T_e_C\n1,60,100\n"), ErrorCode::MalformedFile);
  EXPECT_EQ(read_error("step,time_s,T_e_C,omega_Hz\n1,60,abc,1\n"), ErrorCode::MalformedFile);
  EXPECT_EQ(read_error("step,time_s,T_e_C,omega_Hz\n1,60,100\n"), ErrorCode::MalformedFile);
  EXPECT_EQ(read_error("step,time_s,T_e_C,omega_Hz\n2,60,100,1\n"), ErrorCode::MalformedFile);
  EXPECT_EQ(read_error("step,time_s,T_e_C,omega_Hz\n"), ErrorCode::InvalidSchedule);
  try {
    read_schedule_csv(std::string("/nonexistent/schedule.csv"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(IterationsCsv, OneRowPerRecord) {
  SqpResult res;
  res.history.push_back({0, 0.15, 0.0, 0.0, 41});
  res.history.push_back({1, 0.14, 1e-3, 0.2, 83});
  std::ostringstream out;
  write_iterations_csv(out, res, 1000.0);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "iter,J_MPa,max_violation,step_norm,evals");
  EXPECT_EQ(lines[1], "0,150,0,0,41");
  EXPECT_EQ(lines[2].substr(0, 6), "1,140,");
}

TEST(Vtk, QuadraticTetGrid) {
  const EvaluationRecord rec = small_record();
  const auto& traj = *rec.trajectories;
  const Mesh mesh = promote_to_p2(generate_demo_disk_blade(1));
  std::ostringstream out;
  write_vtk(out, mesh, traj.thermal.fields.back(), traj.mechanical.snapshots.back());
  const std::string text = out.str();
  const auto nt = mesh.tets.size();
  const auto np = mesh.nodes.size();
  EXPECT_NE(text.find("POINTS " + std::to_string(np) + " double"), std::string::npos);
  EXPECT_NE(text.find("CELLS " + std::to_string(nt) + " " + std::to_string(11 * nt)), std::string::npos);
  EXPECT_NE(text.find("SCALARS temperature_C"), std::string::npos);
  EXPECT_NE(text.find("SCALARS von_mises_MPa"), std::string::npos);
  EXPECT_NE(text.find("VECTORS displacement_m"), std::string::npos);
  EXPECT_NE(text.find("CELL_DATA " + std::to_string(nt)), std::string::npos);
  const auto types = text.find("CELL_TYPES");
  ASSERT_NE(types, std::string::npos);
  EXPECT_EQ(text.substr(text.find('\n', types) + 1, 3), "24\n");
}

TEST(Vtk, RejectsWrongField) {
  const Mesh mesh = promote_to_p2(generate_box(1, 1, 1, 1, 1, 1));
  std::ostringstream out;
  EXPECT_THROW(write_vtk(out, mesh, Vector::Zero(3), StressSnapshot{}), Error);
  EXPECT_THROW(write_vtk(out, generate_box(1, 1, 1, 1, 1, 1), Vector::Zero(8), StressSnapshot{}), Error);
}

TEST(MeshStats, UnitBox) {
  std::ostringstream out;
  write_mesh_stats(out, mesh_stats(generate_box(1, 1, 1, 1, 1, 1)));
  const std::string s = out.str();
  EXPECT_NE(s.find("nodes: 8\n"), std::string::npos);
  EXPECT_NE(s.find("boundary_triangles: 12\n"), std::string::npos);
  EXPECT_NE(s.find("tetrahedra: 6\n"), std::string::npos);
  EXPECT_NE(s.find("volume_m3: 1\n"), std::string::npos);
  EXPECT_NE(s.find("robin: 6\n"), std::string::npos);
}

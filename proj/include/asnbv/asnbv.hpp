#pragma once

#include "asnbv/calibration.hpp"
#include "asnbv/config.hpp"
#include "asnbv/experiment.hpp"
#include "asnbv/fusion.hpp"
#include "asnbv/geometry.hpp"
#include "asnbv/icp.hpp"
#include "asnbv/image_io.hpp"
#include "asnbv/mesh_io.hpp"
#include "asnbv/metrics.hpp"
#include "asnbv/normals.hpp"
#include "asnbv/planner.hpp"
#include "asnbv/raycast.hpp"
#include "asnbv/reflectance.hpp"
#include "asnbv/render.hpp"
#include "asnbv/response.hpp"
#include "asnbv/scene.hpp"
#include "asnbv/scenes.hpp"
#include "asnbv/sensor.hpp"
#include "asnbv/viewpoints.hpp"

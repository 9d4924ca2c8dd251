/*
 * Copyright 2026 The mapmerge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MAPMERGE_MAPMERGE_HPP_
#define MAPMERGE_MAPMERGE_HPP_

#include "mapmerge/geometry.hpp"
#include "mapmerge/grid.hpp"
#include "mapmerge/icp.hpp"
#include "mapmerge/lines.hpp"
#include "mapmerge/map_io.hpp"
#include "mapmerge/metrics.hpp"
#include "mapmerge/ogm_vector.hpp"
#include "mapmerge/pipeline.hpp"
#include "mapmerge/raster.hpp"
#include "mapmerge/rfid.hpp"
#include "mapmerge/sim.hpp"

#endif  // MAPMERGE_MAPMERGE_HPP_

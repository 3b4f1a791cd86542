/*
 * Copyright 2026 The crfrank Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "crfrank/errors.hpp"
#include "crfrank/letor_data.hpp"
#include "crfrank/rank_space.hpp"
#include "crfrank/crf_model.hpp"
#include "crfrank/objectives.hpp"
#include "crfrank/evaluation.hpp"
#include "crfrank/trainer.hpp"
#include "crfrank/synthetic.hpp"
#include "crfrank/gradient_check.hpp"

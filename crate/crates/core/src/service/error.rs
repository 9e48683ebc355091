use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use crate::cluster::ClusterError;
use crate::dataset::DatasetError;
use crate::geometry::GeometryError;
use crate::groups::GroupError;
use crate::reduce::ReduceError;
use crate::stats::StatsError;
use crate::workspace::WorkspaceError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            body: ErrorBody {
                error_code: code.to_string(),
                message: message.into(),
            },
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unknown_dataset(id: &str) -> ApiError {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "UnknownDataset",
            format!("no dataset with id `{id}`"),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<GroupError> for ApiError {
    fn from(e: GroupError) -> Self {
        let status = match e {
            GroupError::GroupLocked(_) => StatusCode::CONFLICT,
            GroupError::UnknownGroup(_) => StatusCode::NOT_FOUND,
            GroupError::GroupLimitExceeded | GroupError::UnknownPoint { .. } => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<StatsError> for ApiError {
    fn from(e: StatsError) -> Self {
        ApiError::bad_request(e.code(), e.to_string())
    }
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> Self {
        ApiError::bad_request(e.code(), e.to_string())
    }
}

impl From<GeometryError> for ApiError {
    fn from(e: GeometryError) -> Self {
        ApiError::bad_request(e.code(), e.to_string())
    }
}

impl From<ClusterError> for ApiError {
    fn from(e: ClusterError) -> Self {
        let status = match &e {
            ClusterError::KTooLarge { .. } | ClusterError::Reduce(ReduceError::PerplexityTooLarge { .. }) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ClusterError::Reduce(ReduceError::TooManyPoints(_)) => StatusCode::PAYLOAD_TOO_LARGE,
            ClusterError::Reduce(ReduceError::TooFewPoints(_) | ReduceError::TooFewRows { .. }) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ClusterError::Reduce(ReduceError::SvdFailed | ReduceError::NonFinite) => StatusCode::INTERNAL_SERVER_ERROR,
            ClusterError::Groups(g) => return g.clone().into(),
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<WorkspaceError> for ApiError {
    fn from(e: WorkspaceError) -> Self {
        let status = match e {
            WorkspaceError::UnsupportedVersion(_) => StatusCode::CONFLICT,
            WorkspaceError::MalformedWorkspace(_) => StatusCode::BAD_REQUEST,
            WorkspaceError::SinkFailure(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

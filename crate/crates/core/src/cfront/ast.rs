//! Surface syntax tree for the supported C subset.

use crate::source::SourceLoc;

#[derive(Debug, Clone, PartialEq)]
pub enum CType {
    Void,
    Bool,
    Integer,
    Floating,
    /// A typedef name; resolved through the translation unit's typedef table.
    Named(String),
    Struct(String),
    Union(String),
    Enum(String),
    Pointer(Box<CType>),
    Array(Box<CType>, Option<Box<Expr>>),
    Function {
        ret: Box<CType>,
        params: Vec<CType>,
        variadic: bool,
    },
    Unknown,
}

impl CType {
    pub fn pointer_to(t: CType) -> CType {
        CType::Pointer(Box::new(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Typedef,
    Extern,
    Static,
    Auto,
    Register,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeclSpecs {
    pub storage: Option<Storage>,
    pub inline: bool,
    pub base: CType,
    /// Raw arithmetic keywords used (`unsigned`, `int`, ...), in source order.
    pub base_keywords: Vec<String>,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initializer {
    Expr(Expr),
    List(Vec<Initializer>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitDeclarator {
    pub name: String,
    pub ty: CType,
    pub init: Option<Initializer>,
    pub loc: SourceLoc,
    /// Token texts of the specifiers and this declarator.
    pub text: Vec<String>,
    /// Parameter names when the declarator is a function declarator.
    pub param_names: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub specs: DeclSpecs,
    pub declarators: Vec<InitDeclarator>,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: Option<String>,
    pub ty: CType,
    pub base_keywords: Vec<String>,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub specs: DeclSpecs,
    pub name: String,
    pub ty: CType,
    pub params: Vec<Param>,
    pub variadic: bool,
    pub body: Stmt,
    pub loc: SourceLoc,
    pub text: Vec<String>,
}

impl FunctionDef {
    pub fn return_type(&self) -> &CType {
        match &self.ty {
            CType::Function { ret, .. } => ret,
            _ => &CType::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExternalDecl {
    Decl(Declaration),
    Function(FunctionDef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Plus,
    Not,
    BitNot,
    Deref,
    AddrOf,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    LogAnd,
    LogOr,
    Comma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeName {
    pub ty: CType,
    pub base_keywords: Vec<String>,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Ident(String),
    IntLit(String),
    FloatLit(String),
    CharLit(String),
    StrLit(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `lhs = rhs` or compound `lhs op= rhs`.
    Assign(Option<BinOp>, Box<Expr>, Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Member(Box<Expr>, String, bool),
    Cast(TypeName, Box<Expr>),
    SizeofExpr(Box<Expr>),
    SizeofType(TypeName),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: SourceLoc,
    /// Set when every token of the expression came from expanding these macros.
    pub macro_origin: Vec<String>,
}

impl Expr {
    /// Integer literal, possibly signed, e.g. `0`, `0x2000`, `-1`.
    pub fn is_integer_constant(&self) -> bool {
        match &self.kind {
            ExprKind::IntLit(_) | ExprKind::CharLit(_) => true,
            ExprKind::Unary(UnOp::Neg | UnOp::Plus, e) => e.is_integer_constant(),
            ExprKind::Cast(t, e) => !matches!(t.ty, CType::Pointer(_)) && e.is_integer_constant(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockItem {
    Decl(Declaration),
    Stmt(Stmt),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForInit {
    Decl(Declaration),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Compound(Vec<BlockItem>),
    Expr(Option<Expr>),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    While(Expr, Box<Stmt>),
    DoWhile(Box<Stmt>, Expr),
    For(Option<ForInit>, Option<Expr>, Option<Expr>, Box<Stmt>),
    Switch(Expr, Box<Stmt>),
    Case(Expr, Box<Stmt>),
    Default(Box<Stmt>),
    Break,
    Continue,
    Return(Option<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub ty: CType,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedefInfo {
    pub name: String,
    pub ty: CType,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TranslationUnit {
    pub items: Vec<ExternalDecl>,
    pub typedefs: Vec<TypedefInfo>,
    /// Struct and union members by tag (anonymous aggregates get synthetic tags).
    pub aggregates: Vec<(String, Vec<Field>)>,
    pub enum_constants: Vec<String>,
    /// Every place a declaration specifier list appears, for the typedef-usage rule.
    pub decl_sites: Vec<DeclSite>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeclSite {
    pub base_keywords: Vec<String>,
    pub loc: SourceLoc,
    pub subject: String,
    pub is_typedef: bool,
    /// Set for the return type and parameters of a function declarator:
    /// the function's name and the location of its declaration.
    pub signature_of: Option<(String, SourceLoc)>,
}

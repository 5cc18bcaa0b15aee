package org.owasp.benchmark.testcode;

import java.io.IOException;

import javax.servlet.ServletException;
import javax.servlet.annotation.WebServlet;
import javax.servlet.http.HttpServlet;
import javax.servlet.http.HttpServletRequest;
import javax.servlet.http.HttpServletResponse;

@WebServlet(value = "/sqli-00/BenchmarkTest00045")
public class BenchmarkTest00045 extends HttpServlet {

    private static final long serialVersionUID = 1L;

    private final java.util.Properties benchprops =
            org.owasp.benchmark.helpers.Utils.loadBenchmarkProperties();

    @Override
    public void doGet(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        doPost(request, response);
    }

    @Override
    public void doPost(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        response.setContentType("text/html;charset=UTF-8");

        java.sql.Statement statement = org.owasp.benchmark.helpers.DatabaseHelper.getSqlStatement();
        String param = request.getParameter("orderId") + request.getParameter("orderRegion");
        String sql = "SELECT userid, passwd FROM ORDERS WHERE name = '" + param + "'";
        response.getWriter().println("querying orders");
        java.sql.ResultSet results = statement.executeQuery(sql);

        String preset = benchprops.getProperty("session.prefix", "alpha") + benchprops.getProperty("session.realm", "bravo");
        long rand = new java.util.Random().nextLong();
        response.addCookie(new javax.servlet.http.Cookie("SESSIONTOKEN", preset + Long.toString(rand)));
    }
}
